// SPDX-License-Identifier: Apache-2.0

//! Bilinear-group abstraction.
//!
//! Protocol code is written once against [`Engine`] and instantiated with
//! either [`Bls12`] (the production curve) or [`ToyGroup`] (an insecure
//! exponent-arithmetic model used as a brute-force oracle in tests).
//!
//! Groups use additive notation: `g * x` is exponentiation and `a + b` is the
//! group operation.

use std::fmt::Debug;
use std::hash::Hash;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub};

use rand::RngCore;

use crate::error::Result;

mod bls12;
mod toy;

pub use bls12::Bls12;
pub use toy::{ToyG1, ToyG2, ToyGroup, ToyGt, ToyScalar, TOY_MODULUS};

/// Fixed-width canonical byte encoding.
pub trait CanonicalBytes: Sized {
    const ENCODED_LEN: usize;

    fn to_bytes(&self) -> Vec<u8>;
    /// Strict decode: wrong widths, non-reduced scalars and points outside
    /// the prime-order subgroup are all rejected.
    fn from_bytes(bytes: &[u8]) -> Result<Self>;
}

/// Integers modulo the prime group order.
///
/// Scalars encode as fixed-width big-endian integers.
pub trait ScalarField:
    CanonicalBytes
    + Copy
    + Eq
    + Hash
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + MulAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    fn is_zero(&self) -> bool;
    fn inverse(&self) -> Option<Self>;
    /// Uniform over `[0, p)`.
    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self;
    /// Interpret `bytes` as a big-endian integer and reduce it mod `p`.
    fn from_be_bytes_mod_order(bytes: &[u8]) -> Self;
    /// Big-endian encoding of `p`.
    fn modulus_be_bytes() -> Vec<u8>;
    /// Value as `u64` when it fits.
    fn to_u64(&self) -> Option<u64>;

    /// Uniform over `[1, p)`.
    fn random_nonzero<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }
}

/// A prime-order group whose exponents live in `S`.
pub trait GroupElem<S: ScalarField>:
    CanonicalBytes
    + Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Mul<S, Output = Self>
{
    fn identity() -> Self;
    fn is_identity(&self) -> bool;
    /// Exponentiation by a small non-negative integer.
    fn mul_u64(&self, k: u64) -> Self;
    /// `sum_k bases[k] * scalars[k]`.
    fn msm(bases: &[Self], scalars: &[S]) -> Self;
    /// `base * s` for every `s`, using fixed-base precomputation where it pays off.
    fn batch_mul(base: &Self, scalars: &[S]) -> Vec<Self>;
    /// 64-bit fingerprints of the canonical encodings, computed in bulk.
    ///
    /// Equal points always share a fingerprint; unequal points collide with
    /// negligible probability, so callers confirm hits.
    fn fingerprints(points: &[Self]) -> Vec<u64>;
}

/// The pairing target group.
pub trait TargetElem<S: ScalarField>:
    Copy + Eq + Debug + Send + Sync + 'static + Add<Output = Self> + Mul<S, Output = Self>
{
    fn identity() -> Self;
    fn is_identity(&self) -> bool;
}

/// An asymmetric bilinear group `e: G1 x G2 -> GT` of prime order.
pub trait Engine: Copy + Clone + Debug + Default + Send + Sync + 'static {
    /// Stable identifier recorded in system parameters.
    const GROUP_ID: &'static str;

    type Scalar: ScalarField;
    type G1: GroupElem<Self::Scalar>;
    type G2: GroupElem<Self::Scalar>;
    type Gt: TargetElem<Self::Scalar>;

    fn g1() -> Self::G1;
    fn g2() -> Self::G2;
    fn pairing(a: &Self::G1, b: &Self::G2) -> Self::Gt;
    /// Whether `prod_k e(a_k, b_k)` is the identity, sharing one final
    /// exponentiation where the backend supports it.
    fn pairing_product_is_identity(pairs: &[(Self::G1, Self::G2)]) -> bool {
        pairs
            .iter()
            .fold(Self::Gt::identity(), |acc, (a, b)| acc + Self::pairing(a, b))
            .is_identity()
    }
    /// Hash arbitrary bytes onto G1 under domain-separation tag `dst`.
    fn hash_to_g1(dst: &[u8], msg: &[u8]) -> Self::G1;
}
