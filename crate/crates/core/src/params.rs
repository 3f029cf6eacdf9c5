// SPDX-License-Identifier: Apache-2.0

//! Public system parameters and the hash functions built on them.

use serde::{Deserialize, Serialize};

use crate::encoding::{canonical_json, hex_elem, sha256};
use crate::error::{Error, Result};
use crate::group::{CanonicalBytes, Engine, ScalarField};

/// Domain for the per-block hash `H(I_M || i)`.
pub const TAG_DOMAIN: &str = "sevdel/tag";
/// Domain for the public sector generators `v_j` used in ciphertext tags.
pub const VGEN_DOMAIN: &str = "sevdel/vgen";
/// Domain for Fiat-Shamir challenges of the encryption proof.
pub const FS_DOMAIN: &str = "sevdel/fs";

pub const DEFAULT_SECTOR_BITS: u32 = 32;
pub const SUPPORTED_SECTOR_BITS: [u32; 3] = [8, 16, 32];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SystemParams<E: Engine> {
    pub group_id: String,
    #[serde(with = "hex_elem")]
    pub g1: E::G1,
    #[serde(with = "hex_elem")]
    pub g2: E::G2,
    pub sector_bits: u32,
    pub hash_domains: Vec<String>,
}

impl<E: Engine> SystemParams<E> {
    pub fn new(sector_bits: u32) -> Result<Self> {
        check_sector_bits(sector_bits)?;
        Ok(SystemParams {
            group_id: E::GROUP_ID.to_string(),
            g1: E::g1(),
            g2: E::g2(),
            sector_bits,
            hash_domains: vec![TAG_DOMAIN.into(), VGEN_DOMAIN.into(), FS_DOMAIN.into()],
        })
    }

    /// Parse and check that the parameters describe this engine with its
    /// published generators.
    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| Error::Decode(e.to_string()))?;
        if p.group_id != E::GROUP_ID {
            return Err(Error::Decode(format!("group {} is not {}", p.group_id, E::GROUP_ID)));
        }
        if p.g1 != E::g1() || p.g2 != E::g2() {
            return Err(Error::Decode("non-standard generators".into()));
        }
        check_sector_bits(p.sector_bits)?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        canonical_json(self).expect("params always serialize")
    }

    /// SHA-256 of the canonical JSON form; binds transcripts and contracts
    /// to one parameter set.
    pub fn digest(&self) -> [u8; 32] {
        sha256(&[self.to_json().as_bytes()])
    }

    pub fn hash_to_g1(&self, domain: &str, msg: &[u8]) -> Result<E::G1> {
        if !self.hash_domains.iter().any(|d| d == domain) {
            return Err(Error::UnknownDomain(domain.to_string()));
        }
        Ok(E::hash_to_g1(domain.as_bytes(), msg))
    }

    /// `H(I_M || i)` with `i` as 8-byte big-endian, 1-based.
    pub fn block_hash(&self, file_id: &[u8], index: u64) -> E::G1 {
        E::hash_to_g1(TAG_DOMAIN.as_bytes(), &indexed(file_id, index))
    }

    /// Public generator `v_j` for sector `j` (1-based) of this file.
    pub fn sector_generator(&self, file_id: &[u8], j: u64) -> E::G1 {
        E::hash_to_g1(VGEN_DOMAIN.as_bytes(), &indexed(file_id, j))
    }

    pub fn sector_generators(&self, file_id: &[u8], s: usize) -> Vec<E::G1> {
        (1..=s as u64).map(|j| self.sector_generator(file_id, j)).collect()
    }

    /// Largest sector value plus one.
    pub fn sector_bound(&self) -> u64 {
        1u64 << self.sector_bits
    }
}

fn check_sector_bits(bits: u32) -> Result<()> {
    if SUPPORTED_SECTOR_BITS.contains(&bits) {
        Ok(())
    } else {
        Err(Error::InvalidLayout(format!(
            "sector_bits must be one of {SUPPORTED_SECTOR_BITS:?}, got {bits}"
        )))
    }
}

fn indexed(file_id: &[u8], index: u64) -> Vec<u8> {
    let mut msg = Vec::with_capacity(file_id.len() + 8);
    msg.extend_from_slice(file_id);
    msg.extend_from_slice(&index.to_be_bytes());
    msg
}

/// Map a G1 element to an exponent: SHA-256 of its compressed encoding,
/// read big-endian and reduced mod `p`.
pub fn elem_to_scalar<E: Engine>(x: &E::G1) -> E::Scalar {
    E::Scalar::from_be_bytes_mod_order(&sha256(&[&x.to_bytes()]))
}

/// Domain-separated hash of length-prefixed parts onto the scalar field.
pub fn hash_to_scalar<S: ScalarField>(domain: &str, parts: &[&[u8]]) -> S {
    let mut buf = Vec::new();
    for p in std::iter::once(domain.as_bytes()).chain(parts.iter().copied()) {
        buf.extend_from_slice(&(p.len() as u64).to_be_bytes());
        buf.extend_from_slice(p);
    }
    S::from_be_bytes_mod_order(&sha256(&[&buf]))
}
