// SPDX-License-Identifier: Apache-2.0

//! Sampled challenge sets `{(i, l_i)}` shared by encryption verification and
//! leakage audits.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{canonical_json, hex_bytes, hex_elem, sha256};
use crate::error::{Error, Result};
use crate::group::{CanonicalBytes, Engine, ScalarField};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ChallengeEntry<E: Engine> {
    /// 1-based block index.
    pub index: u64,
    #[serde(with = "hex_elem")]
    pub coeff: E::Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Challenge<E: Engine> {
    pub entries: Vec<ChallengeEntry<E>>,
    #[serde(with = "hex_bytes")]
    pub nonce: Vec<u8>,
}

impl<E: Engine> Challenge<E> {
    /// Sample `count` distinct indices out of `1..=n` without replacement and
    /// a uniform nonzero coefficient for each. Fully determined by `seed`.
    pub fn sample(n: usize, count: usize, seed: &[u8]) -> Result<Self> {
        if count == 0 || count > n {
            return Err(Error::CountOutOfRange { count, n });
        }
        let mut rng = ChaCha20Rng::from_seed(sha256(&[b"sevdel/challenge", seed]));
        let mut picked = index::sample(&mut rng, n, count).into_vec();
        picked.sort_unstable();
        let entries = picked
            .into_iter()
            .map(|i| ChallengeEntry {
                index: i as u64 + 1,
                coeff: E::Scalar::random_nonzero(&mut rng),
            })
            .collect();
        let mut nonce = vec![0u8; 16];
        rand::RngCore::fill_bytes(&mut rng, &mut nonce);
        Ok(Challenge { entries, nonce })
    }

    /// Indices distinct and inside `1..=n`, coefficients nonzero, non-empty.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::CountOutOfRange { count: 0, n });
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.index == 0 || e.index > n as u64 {
                return Err(Error::IndexOutOfRange { index: e.index, n });
            }
            if !seen.insert(e.index) {
                return Err(Error::InvalidArgument(format!("index {} challenged twice", e.index)));
            }
            if e.coeff.is_zero() {
                return Err(Error::InvalidArgument(format!("zero coefficient for {}", e.index)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.index)
    }

    pub fn coeffs(&self) -> Vec<E::Scalar> {
        self.entries.iter().map(|e| e.coeff).collect()
    }

    /// Unambiguous byte encoding for hashing into transcripts.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.entries.len() as u64).to_be_bytes());
        for e in &self.entries {
            out.extend_from_slice(&e.index.to_be_bytes());
            out.extend_from_slice(&e.coeff.to_bytes());
        }
        out.extend_from_slice(&(self.nonce.len() as u64).to_be_bytes());
        out.extend_from_slice(&self.nonce);
        out
    }

    pub fn to_json(&self) -> String {
        canonical_json(self).expect("challenge always serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Decode(e.to_string()))
    }
}

/// Seed bytes for a verification challenge on one file.
pub fn challenge_seed(file_id: &[u8], seed: u64) -> Vec<u8> {
    let mut out = file_id.to_vec();
    out.extend_from_slice(&seed.to_be_bytes());
    out
}
