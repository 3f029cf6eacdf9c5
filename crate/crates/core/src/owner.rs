// SPDX-License-Identifier: Apache-2.0

//! Data-owner side: key generation, homomorphic tags, challenges and
//! verification of the cloud's encryption proof.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::challenge::{challenge_seed, Challenge};
use crate::cloud::EncProof;
use crate::codec::{BlockMatrix, FileManifest};
use crate::encoding::{expect_header, hex_vec, Reader};
use crate::error::{Error, Result};
use crate::group::{CanonicalBytes, Engine, GroupElem, ScalarField};
use crate::nizk::{self, EncryptionStatement};
use crate::params::SystemParams;

const TAGS_MAGIC: &[u8; 16] = b"SEVDEL-TAGSET\0\0\0";
const TAGS_VERSION: u8 = 1;

/// Tagging key `w` with public key `W = g2 * w`.
#[derive(Clone)]
pub struct OwnerKeyPair<E: Engine> {
    secret: E::Scalar,
    public: E::G2,
}

impl<E: Engine> std::fmt::Debug for OwnerKeyPair<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OwnerKeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

impl<E: Engine> OwnerKeyPair<E> {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let secret = E::Scalar::random_nonzero(rng);
        OwnerKeyPair {
            secret,
            public: E::g2() * secret,
        }
    }

    pub fn public(&self) -> &E::G2 {
        &self.public
    }
}

/// Per-file sector generators `u_j = g1 * x_j`. Only `u` is published.
#[derive(Clone)]
pub struct SectorGenerators<E: Engine> {
    exponents: Vec<E::Scalar>,
    public: Vec<E::G1>,
}

impl<E: Engine> SectorGenerators<E> {
    pub fn generate<R: RngCore + ?Sized>(s: usize, rng: &mut R) -> Self {
        let exponents: Vec<E::Scalar> = (0..s).map(|_| E::Scalar::random_nonzero(rng)).collect();
        let public = E::G1::batch_mul(&E::g1(), &exponents);
        SectorGenerators { exponents, public }
    }

    pub fn public(&self) -> &[E::G1] {
        &self.public
    }
}

/// Plaintext tags `phi_i`, one per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TagSet<E: Engine> {
    #[serde(with = "hex_vec")]
    pub tags: Vec<E::G1>,
}

impl<E: Engine> TagSet<E> {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn to_packed(&self) -> Vec<u8> {
        pack_points(TAGS_MAGIC, TAGS_VERSION, &self.tags)
    }

    pub fn from_packed(bytes: &[u8]) -> Result<Self> {
        Ok(TagSet {
            tags: unpack_points(bytes, TAGS_MAGIC, TAGS_VERSION)?,
        })
    }
}

/// Magic, version, count, then fixed-width point encodings.
pub(crate) fn pack_points<T: CanonicalBytes>(magic: &[u8; 16], version: u8, points: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(21 + points.len() * T::ENCODED_LEN);
    out.extend_from_slice(magic);
    out.push(version);
    out.extend_from_slice(&(points.len() as u32).to_be_bytes());
    for p in points {
        out.extend_from_slice(&p.to_bytes());
    }
    out
}

pub(crate) fn unpack_points<T: CanonicalBytes>(
    bytes: &[u8],
    magic: &[u8; 16],
    version: u8,
) -> Result<Vec<T>> {
    let mut r = Reader::new(bytes);
    expect_header(&mut r, magic, version)?;
    let n = r.u32()? as usize;
    let points = (0..n).map(|_| r.elem()).collect::<Result<Vec<T>>>()?;
    r.finish()?;
    Ok(points)
}

fn check_inputs<E: Engine>(
    params: &SystemParams<E>,
    manifest: &FileManifest,
    blocks: &BlockMatrix,
) -> Result<()> {
    manifest.validate()?;
    if manifest.sector_bits != params.sector_bits {
        return Err(Error::InvalidLayout(format!(
            "manifest uses {}-bit sectors, parameters {}",
            manifest.sector_bits, params.sector_bits
        )));
    }
    blocks.check_shape(manifest)
}

/// Tag every block: `phi_i = (H(I_M || i) + sum_j u_j * m_ij) * w`.
///
/// Computed as `H_i * w + g1 * (w * sum_j x_j m_ij)` so only one
/// variable-base multiplication per block is needed.
pub fn outsource<E: Engine, R: RngCore + ?Sized>(
    params: &SystemParams<E>,
    keys: &OwnerKeyPair<E>,
    manifest: &FileManifest,
    blocks: &BlockMatrix,
    rng: &mut R,
) -> Result<(SectorGenerators<E>, TagSet<E>)> {
    check_inputs(params, manifest, blocks)?;
    let gens = SectorGenerators::<E>::generate(manifest.s, rng);
    let w = keys.secret;
    let exps: Vec<E::Scalar> = blocks
        .rows()
        .map(|row| {
            let dot = row
                .iter()
                .zip(&gens.exponents)
                .fold(E::Scalar::zero(), |acc, (m, x)| acc + E::Scalar::from_u64(*m) * *x);
            dot * w
        })
        .collect();
    let lifted = E::G1::batch_mul(&E::g1(), &exps);
    let tags = lifted
        .into_iter()
        .enumerate()
        .map(|(i, l)| params.block_hash(&manifest.file_id, i as u64 + 1) * w + l)
        .collect();
    Ok((gens, TagSet { tags }))
}

/// `H(I_M || i) + sum_j u_j * m_ij`, the value a plaintext tag signs.
pub fn tag_base<E: Engine>(
    params: &SystemParams<E>,
    file_id: &[u8],
    index: u64,
    row: &[u64],
    u: &[E::G1],
) -> E::G1 {
    let scalars: Vec<E::Scalar> = row.iter().map(|m| E::Scalar::from_u64(*m)).collect();
    params.block_hash(file_id, index) + E::G1::msm(u, &scalars)
}

/// Pairing check of one plaintext tag against the owner's public key.
pub fn verify_tag<E: Engine>(
    params: &SystemParams<E>,
    file_id: &[u8],
    u: &[E::G1],
    owner_pk: &E::G2,
    index: u64,
    row: &[u64],
    tag: &E::G1,
) -> bool {
    let base = tag_base(params, file_id, index, row, u);
    E::pairing_product_is_identity(&[(*tag, params.g2), (-base, *owner_pk)])
}

/// Sample `count` distinct blocks with nonzero coefficients.
pub fn gen_challenge<E: Engine>(
    manifest: &FileManifest,
    count: usize,
    seed: u64,
) -> Result<Challenge<E>> {
    Challenge::sample(manifest.n, count, &challenge_seed(&manifest.file_id, seed))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Accept,
    Reject(String),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Check a proof of encryption against the owner's tags and the cloud's
/// encryption key `V`.
///
/// Two conditions: the aggregated plaintext tag matches the published
/// aggregated plaintexts `Q_j`, and the aggregated ciphertexts open to the
/// same `Q_j` under `V`.
pub fn verify_encryption_proof<E: Engine>(
    params: &SystemParams<E>,
    manifest: &FileManifest,
    u: &[E::G1],
    owner_pk: &E::G2,
    key: &E::G1,
    challenge: &Challenge<E>,
    proof: &EncProof<E>,
) -> Result<Verdict> {
    challenge.validate(manifest.n)?;
    if u.len() != manifest.s {
        return Err(Error::DimensionMismatch(format!(
            "{} sector generators for s = {}",
            u.len(),
            manifest.s
        )));
    }
    if proof.p1.len() != manifest.s || proof.q.len() != manifest.s {
        return Err(Error::MalformedProof(format!(
            "expected {} sectors, got {} aggregates and {} plaintexts",
            manifest.s,
            proof.p1.len(),
            proof.q.len()
        )));
    }

    let mut bases: Vec<E::G1> = challenge
        .indices()
        .map(|i| params.block_hash(&manifest.file_id, i))
        .collect();
    bases.extend_from_slice(u);
    let mut scalars = challenge.coeffs();
    scalars.extend_from_slice(&proof.q);
    let signed = E::G1::msm(&bases, &scalars);
    if !E::pairing_product_is_identity(&[(proof.p2, params.g2), (-signed, *owner_pk)]) {
        return Ok(Verdict::Reject("aggregated tag does not match plaintexts".into()));
    }

    let stmt = EncryptionStatement {
        params_digest: params.digest(),
        file_id: &manifest.file_id,
        challenge,
        key: *key,
        p1: &proof.p1,
        p2: proof.p2,
        q: &proof.q,
    };
    if !nizk::verify(&stmt, &proof.nizk)? {
        return Ok(Verdict::Reject("ciphertexts do not open to plaintexts".into()));
    }
    Ok(Verdict::Accept)
}
