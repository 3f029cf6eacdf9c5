// SPDX-License-Identifier: Apache-2.0

//! Cloud side: per-file enclave encryption, ciphertext tags, the proof of
//! encryption and deletion.
//!
//! Sector `m_ij` is encrypted with lifted ElGamal under a per-file key `v`
//! that never leaves the file's enclave:
//!
//! ```text
//! E'_ij = g1 * m_ij + V * r_ij,    E''_ij = g1 * r_ij,    V = g1 * v
//! ```
//!
//! Destroying the enclave destroys `v` and every `r_ij`.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::audit::enc_tag_base;
use crate::bsgs::shared_table;
use crate::challenge::Challenge;
use crate::codec::{BlockMatrix, FileManifest};
use crate::enclave::{DeletionReceipt, EnclaveHandle, EnclaveRegistry};
use crate::encoding::{canonical_json, expect_header, hex_elem, hex_pairs, hex_vec, Reader};
use crate::error::{Error, Result};
use crate::group::{CanonicalBytes, Engine, GroupElem, ScalarField};
use crate::nizk::{self, EncryptionStatement, NizkProof};
use crate::owner::{pack_points, unpack_points, TagSet};
use crate::params::SystemParams;

const CT_MAGIC: &[u8; 16] = b"SEVDEL-CIPHERTXT";
const CT_VERSION: u8 = 1;
const ENC_TAGS_MAGIC: &[u8; 16] = b"SEVDEL-ENCTAGSET";
const ENC_TAGS_VERSION: u8 = 1;

const SEALED_KEY: &str = "v";
const SEALED_RANDOMNESS: &str = "r";

/// Ciphertext-tag key `a` with public key `A = g2 * a`.
#[derive(Clone)]
pub struct ServerKeyPair<E: Engine> {
    secret: E::Scalar,
    public: E::G2,
}

impl<E: Engine> std::fmt::Debug for ServerKeyPair<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServerKeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

impl<E: Engine> ServerKeyPair<E> {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let secret = E::Scalar::random_nonzero(rng);
        ServerKeyPair {
            secret,
            public: E::g2() * secret,
        }
    }

    pub fn public(&self) -> &E::G2 {
        &self.public
    }
}

/// Row-major `n x s` matrix of `(E', E'')` pairs plus the file's key `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiphertextMatrix<E: Engine> {
    s: usize,
    cells: Vec<(E::G1, E::G1)>,
    key: E::G1,
}

impl<E: Engine> CiphertextMatrix<E> {
    pub fn n(&self) -> usize {
        self.cells.len() / self.s
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Public encryption key `V`.
    pub fn key(&self) -> &E::G1 {
        &self.key
    }

    /// Sector `j` of block `i`, both 0-based.
    pub fn get(&self, i: usize, j: usize) -> (E::G1, E::G1) {
        self.cells[i * self.s + j]
    }

    pub fn set(&mut self, i: usize, j: usize, cell: (E::G1, E::G1)) {
        self.cells[i * self.s + j] = cell;
    }

    pub fn row(&self, i: usize) -> &[(E::G1, E::G1)] {
        &self.cells[i * self.s..(i + 1) * self.s]
    }

    /// Magic, version, `n`, `s`, `V`, then `E'` and `E''` of every sector.
    pub fn to_packed(&self) -> Vec<u8> {
        let w = E::G1::ENCODED_LEN;
        let mut out = Vec::with_capacity(25 + w * (1 + 2 * self.cells.len()));
        out.extend_from_slice(CT_MAGIC);
        out.push(CT_VERSION);
        out.extend_from_slice(&(self.n() as u32).to_be_bytes());
        out.extend_from_slice(&(self.s as u32).to_be_bytes());
        out.extend_from_slice(&self.key.to_bytes());
        for (a, b) in &self.cells {
            out.extend_from_slice(&a.to_bytes());
            out.extend_from_slice(&b.to_bytes());
        }
        out
    }

    pub fn from_packed(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        expect_header(&mut r, CT_MAGIC, CT_VERSION)?;
        let n = r.u32()? as usize;
        let s = r.u32()? as usize;
        if n == 0 || s == 0 {
            return Err(Error::Decode("empty ciphertext matrix".into()));
        }
        let key = r.elem()?;
        let cells = (0..n * s)
            .map(|_| Ok((r.elem()?, r.elem()?)))
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(CiphertextMatrix { s, cells, key })
    }

    fn check_shape(&self, manifest: &FileManifest) -> Result<()> {
        if self.n() != manifest.n || self.s != manifest.s {
            return Err(Error::DimensionMismatch(format!(
                "ciphertext is {}x{}, manifest is {}x{}",
                self.n(),
                self.s,
                manifest.n,
                manifest.s
            )));
        }
        Ok(())
    }
}

/// Ciphertext tags `sigma_i`, one per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EncTagSet<E: Engine> {
    #[serde(with = "hex_vec")]
    pub tags: Vec<E::G1>,
}

impl<E: Engine> EncTagSet<E> {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn to_packed(&self) -> Vec<u8> {
        pack_points(ENC_TAGS_MAGIC, ENC_TAGS_VERSION, &self.tags)
    }

    pub fn from_packed(bytes: &[u8]) -> Result<Self> {
        Ok(EncTagSet {
            tags: unpack_points(bytes, ENC_TAGS_MAGIC, ENC_TAGS_VERSION)?,
        })
    }
}

/// Proof that challenged blocks were encrypted under `V`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EncProof<E: Engine> {
    /// `(P1'_j, P1''_j) = sum_i l_i * (E'_ij, E''_ij)`.
    #[serde(with = "hex_pairs")]
    pub p1: Vec<(E::G1, E::G1)>,
    /// `sum_i l_i * phi_i`.
    #[serde(with = "hex_elem")]
    pub p2: E::G1,
    /// `Q_j = sum_i l_i * m_ij`.
    #[serde(with = "hex_vec")]
    pub q: Vec<E::Scalar>,
    pub nizk: NizkProof<E>,
}

impl<E: Engine> EncProof<E> {
    pub fn to_json(&self) -> String {
        canonical_json(self).expect("proof always serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Decode(e.to_string()))
    }

    /// Size of the binary encoding of every element in the proof.
    pub fn encoded_len(&self) -> usize {
        let g = E::G1::ENCODED_LEN;
        let f = E::Scalar::ENCODED_LEN;
        let s = self.q.len();
        2 * s * g + g + s * f + 2 * s * g + f + s * f
    }
}

/// The cloud provider: signing key, public parameters and its enclaves.
pub struct CloudServer<E: Engine> {
    params: SystemParams<E>,
    keys: ServerKeyPair<E>,
    enclaves: Arc<EnclaveRegistry>,
}

impl<E: Engine> CloudServer<E> {
    pub fn new(params: SystemParams<E>, keys: ServerKeyPair<E>, enclaves: Arc<EnclaveRegistry>) -> Self {
        CloudServer {
            params,
            keys,
            enclaves,
        }
    }

    pub fn params(&self) -> &SystemParams<E> {
        &self.params
    }

    pub fn public_key(&self) -> &E::G2 {
        &self.keys.public
    }

    pub fn enclaves(&self) -> &Arc<EnclaveRegistry> {
        &self.enclaves
    }

    /// Accept a file and launch its enclave.
    pub fn receive_file(&self, manifest: &FileManifest) -> Result<EnclaveHandle> {
        manifest.validate()?;
        self.enclaves.create_enclave(&manifest.file_id)
    }

    fn bound(&self, handle: &EnclaveHandle, manifest: &FileManifest) -> Result<()> {
        handle.ensure_alive()?;
        if handle.file_id() != manifest.file_id.as_slice() {
            return Err(Error::EnclaveMismatch);
        }
        Ok(())
    }

    /// Encrypt every sector under a fresh key sealed in `handle`.
    pub fn encrypt_file<R: RngCore + ?Sized>(
        &self,
        handle: &EnclaveHandle,
        manifest: &FileManifest,
        blocks: &BlockMatrix,
        rng: &mut R,
    ) -> Result<CiphertextMatrix<E>> {
        self.bound(handle, manifest)?;
        blocks.check_shape(manifest)?;
        let g = E::g1();
        let v = E::Scalar::random_nonzero(rng);
        let key = g * v;
        let count = blocks.values().len();
        let r: Vec<E::Scalar> = (0..count).map(|_| E::Scalar::random(rng)).collect();

        // One fixed-base pass over g1 for both g1 * r and g1 * m.
        let mut exps = r.clone();
        exps.extend(blocks.values().iter().map(|m| E::Scalar::from_u64(*m)));
        let lifted = E::G1::batch_mul(&g, &exps);
        let (g_r, g_m) = lifted.split_at(count);
        let v_r = E::G1::batch_mul(&key, &r);
        let cells = (0..count).map(|k| (g_m[k] + v_r[k], g_r[k])).collect();

        handle.seal(SEALED_KEY, &v.to_bytes())?;
        let mut sealed = Vec::with_capacity(count * E::Scalar::ENCODED_LEN);
        for x in &r {
            sealed.extend_from_slice(&x.to_bytes());
        }
        handle.seal(SEALED_RANDOMNESS, &sealed)?;
        zeroize::Zeroize::zeroize(&mut sealed);

        Ok(CiphertextMatrix {
            s: manifest.s,
            cells,
            key,
        })
    }

    fn sealed_key(&self, handle: &EnclaveHandle) -> Result<E::Scalar> {
        handle.with_secret(SEALED_KEY, E::Scalar::from_bytes)?
    }

    /// Decrypt one `(E', E'')` pair inside the enclave.
    pub fn decrypt_block(&self, handle: &EnclaveHandle, cell: &(E::G1, E::G1)) -> Result<u64> {
        let v = self.sealed_key(handle)?;
        self.open(&v, cell)
    }

    fn open(&self, v: &E::Scalar, (a, b): &(E::G1, E::G1)) -> Result<u64> {
        let lifted = *a - *b * *v;
        shared_table::<E>(self.params.sector_bits)
            .solve(&lifted)
            .ok_or(Error::DlogOutOfRange)
    }

    pub fn decrypt_file(
        &self,
        handle: &EnclaveHandle,
        manifest: &FileManifest,
        ct: &CiphertextMatrix<E>,
    ) -> Result<BlockMatrix> {
        self.bound(handle, manifest)?;
        ct.check_shape(manifest)?;
        let v = self.sealed_key(handle)?;
        let rows = (0..ct.n())
            .map(|i| ct.row(i).iter().map(|c| self.open(&v, c)).collect())
            .collect::<Result<Vec<Vec<u64>>>>()?;
        BlockMatrix::from_rows(rows)
    }

    /// `sigma_i = (H(I_M || i) + sum_j u_j * h(E'_ij) + v_j * h(E''_ij)) * a`.
    pub fn gen_enc_tags(
        &self,
        manifest: &FileManifest,
        ct: &CiphertextMatrix<E>,
        u: &[E::G1],
    ) -> Result<EncTagSet<E>> {
        ct.check_shape(manifest)?;
        if u.len() != manifest.s {
            return Err(Error::DimensionMismatch("sector generators".into()));
        }
        let vgens = self.params.sector_generators(&manifest.file_id, manifest.s);
        let tags = (0..ct.n())
            .map(|i| {
                enc_tag_base(&self.params, &manifest.file_id, i as u64 + 1, ct.row(i), u, &vgens)
                    * self.keys.secret
            })
            .collect();
        Ok(EncTagSet { tags })
    }

    /// Aggregate the challenged blocks and prove the aggregate ciphertexts
    /// open to the aggregate plaintexts under the sealed key.
    #[allow(clippy::too_many_arguments)]
    pub fn prove_encryption<R: RngCore + ?Sized>(
        &self,
        handle: &EnclaveHandle,
        manifest: &FileManifest,
        blocks: &BlockMatrix,
        ct: &CiphertextMatrix<E>,
        tags: &TagSet<E>,
        challenge: &Challenge<E>,
        rng: &mut R,
    ) -> Result<EncProof<E>> {
        self.bound(handle, manifest)?;
        blocks.check_shape(manifest)?;
        ct.check_shape(manifest)?;
        manifest.check_rows(tags.len(), "tag set")?;
        challenge.validate(manifest.n)?;

        let s = manifest.s;
        let rows: Vec<usize> = challenge.indices().map(|i| i as usize - 1).collect();
        let coeffs = challenge.coeffs();
        let width = E::Scalar::ENCODED_LEN;
        let witness = handle.with_secret(SEALED_RANDOMNESS, |bytes| {
            let mut acc = vec![E::Scalar::zero(); s];
            for (&i, l) in rows.iter().zip(&coeffs) {
                for (j, slot) in acc.iter_mut().enumerate() {
                    let at = (i * s + j) * width;
                    *slot += *l * E::Scalar::from_bytes(&bytes[at..at + width])?;
                }
            }
            Ok::<_, Error>(acc)
        })??;

        let mut p1 = Vec::with_capacity(s);
        let mut q = Vec::with_capacity(s);
        for j in 0..s {
            let a: Vec<E::G1> = rows.iter().map(|&i| ct.get(i, j).0).collect();
            let b: Vec<E::G1> = rows.iter().map(|&i| ct.get(i, j).1).collect();
            p1.push((E::G1::msm(&a, &coeffs), E::G1::msm(&b, &coeffs)));
            q.push(
                rows.iter()
                    .zip(&coeffs)
                    .fold(E::Scalar::zero(), |acc, (&i, l)| acc + *l * E::Scalar::from_u64(blocks.get(i, j))),
            );
        }
        let phis: Vec<E::G1> = rows.iter().map(|&i| tags.tags[i]).collect();
        let p2 = E::G1::msm(&phis, &coeffs);

        let stmt = EncryptionStatement {
            params_digest: self.params.digest(),
            file_id: &manifest.file_id,
            challenge,
            key: ct.key,
            p1: &p1,
            p2,
            q: &q,
        };
        let nizk = nizk::prove(&stmt, &witness, rng)?;
        Ok(EncProof { p1, p2, q, nizk })
    }

    /// Destroy the file's enclave, and with it `v` and every `r_ij`.
    pub fn delete_file(&self, file_id: &[u8]) -> Result<DeletionReceipt> {
        self.enclaves.delete_file(file_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::LogicalClock;
    use crate::codec::split;
    use crate::group::{Bls12, ToyGroup};
    use crate::owner::{gen_challenge, outsource, verify_encryption_proof, OwnerKeyPair, Verdict};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn server<E: Engine>(bits: u32, rng: &mut ChaCha20Rng) -> CloudServer<E> {
        CloudServer::new(
            SystemParams::new(bits).unwrap(),
            ServerKeyPair::generate(rng),
            Arc::new(EnclaveRegistry::new(LogicalClock::new())),
        )
    }

    #[test]
    fn encrypt_decrypt_round_trip_on_bls() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let cloud = server::<Bls12>(16, &mut rng);
        let (m, b) = split("o", "f", b"round trip through the enclave", 3, 16).unwrap();
        let h = cloud.receive_file(&m).unwrap();
        let ct = cloud.encrypt_file(&h, &m, &b, &mut rng).unwrap();
        assert_eq!(cloud.decrypt_file(&h, &m, &ct).unwrap(), b);
        assert_eq!(CiphertextMatrix::<Bls12>::from_packed(&ct.to_packed()).unwrap(), ct);
    }

    #[test]
    fn boundary_sector_values_decrypt() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let cloud = server::<ToyGroup>(32, &mut rng);
        let b = BlockMatrix::from_rows(vec![vec![0, 1, u32::MAX as u64]]).unwrap();
        let m = FileManifest {
            file_id: vec![1; 32],
            n: 1,
            s: 3,
            sector_bits: 32,
            original_len: 12,
        };
        let h = cloud.receive_file(&m).unwrap();
        let ct = cloud.encrypt_file(&h, &m, &b, &mut rng).unwrap();
        assert_eq!(cloud.decrypt_file(&h, &m, &ct).unwrap(), b);
    }

    #[test]
    fn out_of_range_plaintext_is_reported() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let cloud = server::<Bls12>(32, &mut rng);
        let (m, b) = split("o", "f", &[5; 4], 1, 32).unwrap();
        let h = cloud.receive_file(&m).unwrap();
        let ct = cloud.encrypt_file(&h, &m, &b, &mut rng).unwrap();
        let (a, e) = ct.get(0, 0);
        let forged = (a + Bls12::g1().mul_u64(1 << 40), e);
        assert_eq!(cloud.decrypt_block(&h, &forged).unwrap_err(), Error::DlogOutOfRange);
    }

    #[test]
    fn encryption_is_probabilistic() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let cloud = server::<Bls12>(8, &mut rng);
        let (m, b) = split("o", "f", &[42], 1, 8).unwrap();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..100 {
            let h = cloud.receive_file(&m).unwrap();
            let ct = cloud.encrypt_file(&h, &m, &b, &mut rng).unwrap();
            assert!(seen.insert(ct.get(0, 0).1.to_bytes()));
            assert_eq!(cloud.decrypt_block(&h, &ct.get(0, 0)).unwrap(), 42);
            cloud.delete_file(&m.file_id).unwrap();
        }
    }

    #[test]
    fn enclave_must_match_file() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let cloud = server::<ToyGroup>(8, &mut rng);
        let (m1, b1) = split("o", "a", &[1, 2], 1, 8).unwrap();
        let (m2, _) = split("o", "b", &[1, 2], 1, 8).unwrap();
        let _h1 = cloud.receive_file(&m1).unwrap();
        let h2 = cloud.receive_file(&m2).unwrap();
        assert_eq!(cloud.encrypt_file(&h2, &m1, &b1, &mut rng).unwrap_err(), Error::EnclaveMismatch);
    }

    #[test]
    fn deleted_file_refuses_every_operation() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let cloud = server::<ToyGroup>(16, &mut rng);
        let owner = OwnerKeyPair::<ToyGroup>::generate(&mut rng);
        let (m, b) = split("o", "f", &[7; 30], 2, 16).unwrap();
        let (gens, tags) = outsource(cloud.params(), &owner, &m, &b, &mut rng).unwrap();
        let h = cloud.receive_file(&m).unwrap();
        let ct = cloud.encrypt_file(&h, &m, &b, &mut rng).unwrap();
        let ch = gen_challenge(&m, 3, 1).unwrap();

        let receipt = cloud.delete_file(&m.file_id).unwrap();
        assert!(receipt.zeroized_bytes > 0);
        assert_eq!(cloud.decrypt_block(&h, &ct.get(0, 0)).unwrap_err(), Error::EnclaveDestroyed);
        assert_eq!(cloud.decrypt_file(&h, &m, &ct).unwrap_err(), Error::EnclaveDestroyed);
        assert_eq!(
            cloud.prove_encryption(&h, &m, &b, &ct, &tags, &ch, &mut rng).unwrap_err(),
            Error::EnclaveDestroyed
        );
        assert_eq!(cloud.encrypt_file(&h, &m, &b, &mut rng).unwrap_err(), Error::EnclaveDestroyed);
        assert_eq!(cloud.delete_file(&m.file_id).unwrap_err(), Error::UnknownFile);
        // Ciphertext tags need no secrets beyond `a` and still work.
        assert!(cloud.gen_enc_tags(&m, &ct, gens.public()).is_ok());
    }

    #[test]
    fn honest_proof_accepts_and_skipped_block_rejects() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let cloud = server::<Bls12>(32, &mut rng);
        let owner = OwnerKeyPair::<Bls12>::generate(&mut rng);
        let (m, b) = split("o", "f", &(0..96u8).collect::<Vec<_>>(), 4, 32).unwrap();
        let (gens, tags) = outsource(cloud.params(), &owner, &m, &b, &mut rng).unwrap();
        let h = cloud.receive_file(&m).unwrap();
        let mut ct = cloud.encrypt_file(&h, &m, &b, &mut rng).unwrap();
        let ch = gen_challenge(&m, m.n, 9).unwrap();

        let proof = cloud.prove_encryption(&h, &m, &b, &ct, &tags, &ch, &mut rng).unwrap();
        let verdict =
            verify_encryption_proof(cloud.params(), &m, gens.public(), owner.public(), ct.key(), &ch, &proof).unwrap();
        assert_eq!(verdict, Verdict::Accept);
        let back = EncProof::<Bls12>::from_json(&proof.to_json()).unwrap();
        assert_eq!(back, proof);

        // Block 2 stored in the clear: (g1 * m, 0).
        for j in 0..m.s {
            ct.set(1, j, (Bls12::g1().mul_u64(b.get(1, j)), GroupElem::identity()));
        }
        let proof = cloud.prove_encryption(&h, &m, &b, &ct, &tags, &ch, &mut rng).unwrap();
        let verdict =
            verify_encryption_proof(cloud.params(), &m, gens.public(), owner.public(), ct.key(), &ch, &proof).unwrap();
        assert!(!verdict.is_accept());
    }
}
