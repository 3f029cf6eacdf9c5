// SPDX-License-Identifier: Apache-2.0

//! Leakage audits after deletion.
//!
//! A ciphertext tag `sigma_i` can only be produced by the cloud (it needs
//! `a`). If an owner later holds ciphertext blocks together with a valid
//! aggregate of their tags, the cloud kept data it claimed to delete.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::challenge::Challenge;
use crate::cloud::{CiphertextMatrix, EncTagSet};
use crate::codec::FileManifest;
use crate::encoding::{canonical_json, hex_elem, hex_pairs};
use crate::error::{Error, Result};
use crate::group::{Engine, GroupElem};
use crate::owner::Verdict;
use crate::params::{elem_to_scalar, SystemParams};

/// `H(I_M || i) + sum_j u_j * h(E'_ij) + v_j * h(E''_ij)`.
pub fn enc_tag_base<E: Engine>(
    params: &SystemParams<E>,
    file_id: &[u8],
    index: u64,
    row: &[(E::G1, E::G1)],
    u: &[E::G1],
    vgens: &[E::G1],
) -> E::G1 {
    let mut bases = Vec::with_capacity(1 + 2 * row.len());
    let mut scalars = Vec::with_capacity(1 + 2 * row.len());
    bases.push(params.block_hash(file_id, index));
    scalars.push(crate::group::ScalarField::one());
    for ((a, b), (uj, vj)) in row.iter().zip(u.iter().zip(vgens)) {
        bases.push(*uj);
        scalars.push(elem_to_scalar::<E>(a));
        bases.push(*vj);
        scalars.push(elem_to_scalar::<E>(b));
    }
    E::G1::msm(&bases, &scalars)
}

/// The `(E', E'')` pairs of one block.
pub type CiphertextRow<E> = Vec<(<E as Engine>::G1, <E as Engine>::G1)>;

/// Ciphertext blocks that surfaced somewhere, keyed by 1-based index.
#[derive(Debug, Clone, Default)]
pub struct LeakedBlocks<E: Engine> {
    blocks: BTreeMap<u64, CiphertextRow<E>>,
}

impl<E: Engine> LeakedBlocks<E> {
    pub fn new() -> Self {
        LeakedBlocks {
            blocks: BTreeMap::new(),
        }
    }

    /// Every block of a ciphertext matrix.
    pub fn all_of(ct: &CiphertextMatrix<E>) -> Self {
        let blocks = (0..ct.n()).map(|i| (i as u64 + 1, ct.row(i).to_vec())).collect();
        LeakedBlocks { blocks }
    }

    pub fn insert(&mut self, index: u64, row: Vec<(E::G1, E::G1)>) {
        self.blocks.insert(index, row);
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RevealedBlock<E: Engine> {
    pub index: u64,
    #[serde(with = "hex_pairs")]
    pub sectors: Vec<(E::G1, E::G1)>,
}

/// Aggregated evidence that challenged ciphertext blocks still exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AuditResponse<E: Engine> {
    /// `(Q1'_j, Q1''_j) = sum_i gamma_i * (E'_ij, E''_ij)`.
    #[serde(with = "hex_pairs")]
    pub q1: Vec<(E::G1, E::G1)>,
    /// `sum_i gamma_i * sigma_i`.
    #[serde(with = "hex_elem")]
    pub q2: E::G1,
    /// The challenged blocks themselves, needed to recompute `h(E)`.
    pub revealed: Vec<RevealedBlock<E>>,
}

impl<E: Engine> AuditResponse<E> {
    pub fn to_json(&self) -> String {
        canonical_json(self).expect("audit response always serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Decode(e.to_string()))
    }
}

/// Build an audit response from leaked ciphertexts and their tags. Fails
/// with [`Error::MissingBlock`] if a challenged block was never leaked.
pub fn audit_respond<E: Engine>(
    manifest: &FileManifest,
    leaked: &LeakedBlocks<E>,
    tags: &EncTagSet<E>,
    challenge: &Challenge<E>,
) -> Result<AuditResponse<E>> {
    challenge.validate(manifest.n)?;
    manifest.check_rows(tags.len(), "ciphertext tag set")?;
    let mut revealed = Vec::with_capacity(challenge.len());
    for i in challenge.indices() {
        let row = leaked.blocks.get(&i).ok_or(Error::MissingBlock(i))?;
        if row.len() != manifest.s {
            return Err(Error::DimensionMismatch(format!("leaked block {i} has {} sectors", row.len())));
        }
        revealed.push(RevealedBlock {
            index: i,
            sectors: row.clone(),
        });
    }
    let coeffs = challenge.coeffs();
    let q1 = aggregate(&revealed, &coeffs, manifest.s);
    let chosen: Vec<E::G1> = challenge.indices().map(|i| tags.tags[i as usize - 1]).collect();
    Ok(AuditResponse {
        q1,
        q2: E::G1::msm(&chosen, &coeffs),
        revealed,
    })
}

fn aggregate<E: Engine>(
    revealed: &[RevealedBlock<E>],
    coeffs: &[E::Scalar],
    s: usize,
) -> Vec<(E::G1, E::G1)> {
    (0..s)
        .map(|j| {
            let a: Vec<E::G1> = revealed.iter().map(|b| b.sectors[j].0).collect();
            let b: Vec<E::G1> = revealed.iter().map(|b| b.sectors[j].1).collect();
            (E::G1::msm(&a, coeffs), E::G1::msm(&b, coeffs))
        })
        .collect()
}

/// Publicly check an audit response against the cloud's tag key `A`.
///
/// Accepts iff the revealed blocks are exactly the challenged ones, they
/// aggregate to `Q1`, and `e(Q2, g2) = e(sum_i gamma_i * base_i, A)`.
pub fn verify_audit_response<E: Engine>(
    params: &SystemParams<E>,
    file_id: &[u8],
    u: &[E::G1],
    server_pk: &E::G2,
    challenge: &Challenge<E>,
    response: &AuditResponse<E>,
) -> Verdict {
    let s = u.len();
    if response.revealed.len() != challenge.len()
        || response
            .revealed
            .iter()
            .zip(challenge.indices())
            .any(|(b, i)| b.index != i || b.sectors.len() != s)
    {
        return Verdict::Reject("revealed blocks do not match the challenge".into());
    }
    if response.q1.len() != s {
        return Verdict::Reject("wrong number of aggregated sectors".into());
    }
    let coeffs = challenge.coeffs();
    if aggregate(&response.revealed, &coeffs, s) != response.q1 {
        return Verdict::Reject("aggregate ciphertext does not match revealed blocks".into());
    }
    let vgens = params.sector_generators(file_id, s);
    let bases: Vec<E::G1> = response
        .revealed
        .iter()
        .map(|b| enc_tag_base(params, file_id, b.index, &b.sectors, u, &vgens))
        .collect();
    let signed = E::G1::msm(&bases, &coeffs);
    if E::pairing_product_is_identity(&[(response.q2, params.g2), (-signed, *server_pk)]) {
        Verdict::Accept
    } else {
        Verdict::Reject("aggregate tag does not verify".into())
    }
}
