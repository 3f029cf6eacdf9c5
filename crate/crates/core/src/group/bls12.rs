// SPDX-License-Identifier: Apache-2.0

//! BLS12-381 backend (arkworks).
//!
//! Encodings: G1 and G2 use the 48/96-byte compressed form (big-endian `x`
//! with the three flag bits in the leading byte); scalars are 32-byte
//! big-endian.

use ark_bls12_381::{g1, g2, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::short_weierstrass::{Affine, Projective, SWCurveConfig};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::scalar_mul::BatchMulPreprocessing;
use ark_ec::{AdditiveGroup, CurveGroup, PrimeGroup, VariableBaseMSM};
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_ff::{BigInteger, Field, PrimeField, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use rand::RngCore;
use sha2::Sha256;

use super::{CanonicalBytes, Engine, GroupElem, ScalarField, TargetElem};
use crate::error::{Error, Result};

/// Below this many scalars a fixed-base table costs more than it saves.
const FIXED_BASE_THRESHOLD: usize = 32;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bls12;

impl CanonicalBytes for Fr {
    const ENCODED_LEN: usize = 32;

    fn to_bytes(&self) -> Vec<u8> {
        self.into_bigint().to_bytes_be()
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != 32 {
            return Err(Error::InvalidElement("scalar must be 32 bytes"));
        }
        let mut le = bytes.to_vec();
        le.reverse();
        let mut limbs = [0u64; 4];
        for (limb, chunk) in limbs.iter_mut().zip(le.chunks(8)) {
            *limb = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Fr::from_bigint(ark_ff::BigInt(limbs)).ok_or(Error::InvalidElement("scalar not reduced"))
    }
}

impl ScalarField for Fr {
    fn zero() -> Self {
        <Fr as Zero>::zero()
    }

    fn one() -> Self {
        <Fr as ark_ff::One>::one()
    }

    fn from_u64(v: u64) -> Self {
        Fr::from(v)
    }

    fn is_zero(&self) -> bool {
        <Fr as Zero>::is_zero(self)
    }

    fn inverse(&self) -> Option<Self> {
        Field::inverse(self)
    }

    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        // 512 bits reduced mod p; the bias is below 2^-256.
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        PrimeField::from_be_bytes_mod_order(&wide)
    }

    fn from_be_bytes_mod_order(bytes: &[u8]) -> Self {
        PrimeField::from_be_bytes_mod_order(bytes)
    }

    fn modulus_be_bytes() -> Vec<u8> {
        Fr::MODULUS.to_bytes_be()
    }

    fn to_u64(&self) -> Option<u64> {
        let limbs = self.into_bigint().0;
        limbs[1..].iter().all(|l| *l == 0).then_some(limbs[0])
    }
}

/// Compressed encoding width of a curve's points.
pub trait CompressedWidth {
    const WIDTH: usize;
}

impl CompressedWidth for g1::Config {
    const WIDTH: usize = 48;
}

impl CompressedWidth for g2::Config {
    const WIDTH: usize = 96;
}

impl<P> CanonicalBytes for Projective<P>
where
    P: SWCurveConfig<ScalarField = Fr> + CompressedWidth,
{
    const ENCODED_LEN: usize = P::WIDTH;

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(P::WIDTH);
        self.into_affine()
            .serialize_compressed(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != P::WIDTH {
            return Err(Error::InvalidElement("wrong encoding width"));
        }
        // Validates on-curve and subgroup membership.
        Affine::<P>::deserialize_compressed(bytes)
            .map(Into::into)
            .map_err(|_| Error::InvalidElement("not a valid subgroup point"))
    }
}

impl<P> GroupElem<Fr> for Projective<P>
where
    P: SWCurveConfig<ScalarField = Fr> + CompressedWidth,
{
    fn identity() -> Self {
        <Self as AdditiveGroup>::ZERO
    }

    fn is_identity(&self) -> bool {
        Zero::is_zero(self)
    }

    fn mul_u64(&self, k: u64) -> Self {
        self.mul_bigint([k])
    }

    fn msm(bases: &[Self], scalars: &[Fr]) -> Self {
        assert_eq!(bases.len(), scalars.len(), "msm length mismatch");
        let affine = Self::normalize_batch(bases);
        <Self as VariableBaseMSM>::msm_unchecked(&affine, scalars)
    }

    fn batch_mul(base: &Self, scalars: &[Fr]) -> Vec<Self> {
        if scalars.len() < FIXED_BASE_THRESHOLD {
            return scalars.iter().map(|s| *base * s).collect();
        }
        let table = BatchMulPreprocessing::new(*base, scalars.len());
        table.batch_mul(scalars).into_iter().map(Into::into).collect()
    }

    fn fingerprints(points: &[Self]) -> Vec<u64> {
        Self::normalize_batch(points)
            .iter()
            .map(|p| {
                if p.infinity {
                    u64::MAX
                } else {
                    let x = p.x.to_base_prime_field_elements().next().unwrap();
                    x.into_bigint().as_ref()[0]
                }
            })
            .collect()
    }
}

impl TargetElem<Fr> for PairingOutput<Bls12_381> {
    fn identity() -> Self {
        Zero::zero()
    }

    fn is_identity(&self) -> bool {
        Zero::is_zero(self)
    }
}

type G1Hasher = MapToCurveBasedHasher<G1Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g1::Config>>;

impl Engine for Bls12 {
    const GROUP_ID: &'static str = "bls12-381";

    type Scalar = Fr;
    type G1 = G1Projective;
    type G2 = G2Projective;
    type Gt = PairingOutput<Bls12_381>;

    fn g1() -> G1Projective {
        G1Projective::generator()
    }

    fn g2() -> G2Projective {
        G2Projective::generator()
    }

    fn pairing(a: &G1Projective, b: &G2Projective) -> Self::Gt {
        Bls12_381::pairing(*a, *b)
    }

    fn pairing_product_is_identity(pairs: &[(G1Projective, G2Projective)]) -> bool {
        let a: Vec<G1Affine> = pairs.iter().map(|(a, _)| a.into_affine()).collect();
        let b: Vec<G2Affine> = pairs.iter().map(|(_, b)| b.into_affine()).collect();
        Zero::is_zero(&Bls12_381::multi_pairing(a, b))
    }

    fn hash_to_g1(dst: &[u8], msg: &[u8]) -> G1Projective {
        let hasher = G1Hasher::new(dst).expect("hash-to-curve parameters are valid for BLS12-381");
        hasher
            .hash(msg)
            .expect("WB map is total on BLS12-381 G1")
            .into()
    }
}
