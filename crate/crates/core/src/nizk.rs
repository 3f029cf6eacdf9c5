// SPDX-License-Identifier: Apache-2.0

//! Non-interactive proof that the aggregated ciphertexts open to the
//! published aggregated plaintexts.
//!
//! For each sector `j` the prover knows `R_j = sum_i l_i * r_ij` with
//!
//! ```text
//! P1'_j - g1 * Q_j = V * R_j    and    P1''_j = g1 * R_j
//! ```
//!
//! which is a Chaum-Pedersen equality of discrete logs. All sectors share
//! one Fiat-Shamir challenge bound to the whole statement.

use serde::{Deserialize, Serialize};

use crate::challenge::Challenge;
use crate::encoding::{hex_elem, hex_pairs, hex_vec};
use crate::error::{Error, Result};
use crate::group::{CanonicalBytes, Engine, GroupElem, ScalarField};
use crate::params::{hash_to_scalar, FS_DOMAIN};

/// Public inputs the proof is bound to.
pub struct EncryptionStatement<'a, E: Engine> {
    pub params_digest: [u8; 32],
    pub file_id: &'a [u8],
    pub challenge: &'a Challenge<E>,
    /// Encryption public key `V = g1 * v`.
    pub key: E::G1,
    /// `(P1'_j, P1''_j)` per sector.
    pub p1: &'a [(E::G1, E::G1)],
    pub p2: E::G1,
    pub q: &'a [E::Scalar],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NizkProof<E: Engine> {
    /// `(T'_j, T''_j) = (V * beta_j, g1 * beta_j)`.
    #[serde(with = "hex_pairs")]
    pub commitments: Vec<(E::G1, E::G1)>,
    #[serde(with = "hex_elem")]
    pub challenge: E::Scalar,
    /// `z_j = beta_j + c * R_j`.
    #[serde(with = "hex_vec")]
    pub responses: Vec<E::Scalar>,
}

impl<E: Engine> EncryptionStatement<'_, E> {
    fn check_shape(&self) -> Result<()> {
        if self.p1.len() != self.q.len() || self.p1.is_empty() {
            return Err(Error::MalformedProof(format!(
                "{} aggregated ciphertexts for {} plaintexts",
                self.p1.len(),
                self.q.len()
            )));
        }
        Ok(())
    }

    /// `(X_j, Y_j)` with `X_j = V * R_j` and `Y_j = g1 * R_j`.
    fn images(&self) -> Vec<(E::G1, E::G1)> {
        let g = E::g1();
        self.p1
            .iter()
            .zip(self.q)
            .map(|((a, b), q)| (*a - g * *q, *b))
            .collect()
    }
}

/// Fiat-Shamir challenge over the statement and the commitments.
pub fn fiat_shamir<E: Engine>(
    stmt: &EncryptionStatement<'_, E>,
    commitments: &[(E::G1, E::G1)],
) -> E::Scalar {
    let mut body = Vec::new();
    let mut put = |bytes: &[u8]| {
        body.extend_from_slice(&(bytes.len() as u64).to_be_bytes());
        body.extend_from_slice(bytes);
    };
    put(&stmt.key.to_bytes());
    for (a, b) in stmt.p1 {
        put(&a.to_bytes());
        put(&b.to_bytes());
    }
    put(&stmt.p2.to_bytes());
    for q in stmt.q {
        put(&q.to_bytes());
    }
    for (a, b) in commitments {
        put(&a.to_bytes());
        put(&b.to_bytes());
    }
    hash_to_scalar(
        FS_DOMAIN,
        &[
            &stmt.params_digest,
            stmt.file_id,
            &stmt.challenge.to_bytes(),
            &body,
        ],
    )
}

/// First move: commitments for nonces `beta`.
pub fn commit<E: Engine>(key: &E::G1, betas: &[E::Scalar]) -> Vec<(E::G1, E::G1)> {
    let g = E::g1();
    betas.iter().map(|b| (*key * *b, g * *b)).collect()
}

/// Third move: `z_j = beta_j + c * R_j`.
pub fn respond<S: ScalarField>(betas: &[S], witness: &[S], c: S) -> Vec<S> {
    betas.iter().zip(witness).map(|(b, r)| *b + c * *r).collect()
}

/// Verification equations for an explicit challenge `c`.
pub fn check_transcript<E: Engine>(
    stmt: &EncryptionStatement<'_, E>,
    commitments: &[(E::G1, E::G1)],
    c: E::Scalar,
    responses: &[E::Scalar],
) -> bool {
    let images = stmt.images();
    if commitments.len() != images.len() || responses.len() != images.len() {
        return false;
    }
    let g = E::g1();
    images
        .iter()
        .zip(commitments)
        .zip(responses)
        .all(|(((x, y), (t1, t2)), z)| {
            stmt.key * *z == *t1 + *x * c && g * *z == *t2 + *y * c
        })
}

/// Recover `R_j` from two accepting transcripts with equal commitments and
/// different challenges.
pub fn extract<S: ScalarField>(z1: &[S], c1: S, z2: &[S], c2: S) -> Option<Vec<S>> {
    let inv = (c1 - c2).inverse()?;
    Some(z1.iter().zip(z2).map(|(a, b)| (*a - *b) * inv).collect())
}

pub fn prove<E: Engine, R: rand::RngCore + ?Sized>(
    stmt: &EncryptionStatement<'_, E>,
    witness: &[E::Scalar],
    rng: &mut R,
) -> Result<NizkProof<E>> {
    stmt.check_shape()?;
    if witness.len() != stmt.q.len() {
        return Err(Error::DimensionMismatch("witness length".into()));
    }
    let betas: Vec<E::Scalar> = (0..witness.len()).map(|_| E::Scalar::random(rng)).collect();
    let commitments = commit::<E>(&stmt.key, &betas);
    let challenge = fiat_shamir(stmt, &commitments);
    let responses = respond(&betas, witness, challenge);
    Ok(NizkProof {
        commitments,
        challenge,
        responses,
    })
}

/// Accepts only if the key is a non-identity point, the Fiat-Shamir
/// challenge is recomputed exactly and every sector equation holds.
pub fn verify<E: Engine>(stmt: &EncryptionStatement<'_, E>, proof: &NizkProof<E>) -> Result<bool> {
    stmt.check_shape()?;
    if proof.commitments.len() != stmt.q.len() || proof.responses.len() != stmt.q.len() {
        return Err(Error::MalformedProof("nizk arity".into()));
    }
    if stmt.key.is_identity() {
        return Ok(false);
    }
    if fiat_shamir(stmt, &proof.commitments) != proof.challenge {
        return Ok(false);
    }
    Ok(check_transcript(stmt, &proof.commitments, proof.challenge, &proof.responses))
}
