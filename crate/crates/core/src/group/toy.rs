// SPDX-License-Identifier: Apache-2.0

//! Insecure toy bilinear group.
//!
//! Every group element is stored as its discrete logarithm modulo the
//! Mersenne prime `2^61 - 1`, so exponentiation is modular multiplication and
//! the pairing is the product of the two logarithms. Discrete logs are
//! therefore free, which is exactly what brute-force test oracles need.
//! Never use it for anything else.

use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub};

use rand::RngCore;
use sha2::{Digest, Sha256};

use super::{CanonicalBytes, Engine, GroupElem, ScalarField, TargetElem};
use crate::error::{Error, Result};

pub const TOY_MODULUS: u64 = (1 << 61) - 1;

#[inline]
fn reduce(v: u128) -> u64 {
    (v % TOY_MODULUS as u128) as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ToyScalar(u64);

impl ToyScalar {
    pub const fn value(self) -> u64 {
        self.0
    }
}

impl Add for ToyScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ToyScalar(reduce(self.0 as u128 + rhs.0 as u128))
    }
}

impl Sub for ToyScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ToyScalar {
    type Output = Self;
    fn neg(self) -> Self {
        ToyScalar(if self.0 == 0 { 0 } else { TOY_MODULUS - self.0 })
    }
}

impl Mul for ToyScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ToyScalar(reduce(self.0 as u128 * rhs.0 as u128))
    }
}

impl AddAssign for ToyScalar {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl MulAssign for ToyScalar {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl CanonicalBytes for ToyScalar {
    const ENCODED_LEN: usize = 8;

    fn to_bytes(&self) -> Vec<u8> {
        self.0.to_be_bytes().to_vec()
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let raw: [u8; 8] = bytes
            .try_into()
            .map_err(|_| Error::InvalidElement("toy scalar must be 8 bytes"))?;
        let v = u64::from_be_bytes(raw);
        if v >= TOY_MODULUS {
            return Err(Error::InvalidElement("toy scalar not reduced"));
        }
        Ok(ToyScalar(v))
    }
}

impl ScalarField for ToyScalar {
    fn zero() -> Self {
        ToyScalar(0)
    }

    fn one() -> Self {
        ToyScalar(1)
    }

    fn from_u64(v: u64) -> Self {
        ToyScalar(v % TOY_MODULUS)
    }

    fn is_zero(&self) -> bool {
        self.0 == 0
    }

    fn inverse(&self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        // Fermat: x^(p-2).
        let mut base = *self;
        let mut exp = TOY_MODULUS - 2;
        let mut acc = ToyScalar(1);
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        Some(acc)
    }

    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = rng.next_u64() & TOY_MODULUS;
            if v < TOY_MODULUS {
                return ToyScalar(v);
            }
        }
    }

    fn from_be_bytes_mod_order(bytes: &[u8]) -> Self {
        ToyScalar(
            bytes
                .iter()
                .fold(0u64, |acc, b| reduce(((acc as u128) << 8) | *b as u128)),
        )
    }

    fn modulus_be_bytes() -> Vec<u8> {
        TOY_MODULUS.to_be_bytes().to_vec()
    }

    fn to_u64(&self) -> Option<u64> {
        Some(self.0)
    }
}

macro_rules! toy_group {
    ($name:ident) => {
        /// Element represented by its discrete log to the fixed generator.
        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
        pub struct $name(pub ToyScalar);

        impl $name {
            /// The discrete logarithm; the whole point of the toy group.
            pub fn log(self) -> ToyScalar {
                self.0
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                $name(self.0 + rhs.0)
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                $name(self.0 - rhs.0)
            }
        }

        impl Neg for $name {
            type Output = Self;
            fn neg(self) -> Self {
                $name(-self.0)
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: Self) {
                self.0 += rhs.0;
            }
        }

        impl Mul<ToyScalar> for $name {
            type Output = Self;
            fn mul(self, rhs: ToyScalar) -> Self {
                $name(self.0 * rhs)
            }
        }
    };
}

toy_group!(ToyG1);
toy_group!(ToyG2);
toy_group!(ToyGt);

macro_rules! toy_curve {
    ($name:ident) => {
        impl CanonicalBytes for $name {
            const ENCODED_LEN: usize = 8;

            fn to_bytes(&self) -> Vec<u8> {
                self.0.to_bytes()
            }

            fn from_bytes(bytes: &[u8]) -> Result<Self> {
                ToyScalar::from_bytes(bytes).map($name)
            }
        }

        impl GroupElem<ToyScalar> for $name {
            fn identity() -> Self {
                $name(ToyScalar(0))
            }

            fn is_identity(&self) -> bool {
                self.0 .0 == 0
            }

            fn mul_u64(&self, k: u64) -> Self {
                $name(self.0 * ToyScalar::from_u64(k))
            }

            fn msm(bases: &[Self], scalars: &[ToyScalar]) -> Self {
                assert_eq!(bases.len(), scalars.len(), "msm length mismatch");
                bases
                    .iter()
                    .zip(scalars)
                    .fold(Self::identity(), |acc, (b, s)| acc + *b * *s)
            }

            fn batch_mul(base: &Self, scalars: &[ToyScalar]) -> Vec<Self> {
                scalars.iter().map(|s| *base * *s).collect()
            }

            fn fingerprints(points: &[Self]) -> Vec<u64> {
                points.iter().map(|p| p.0 .0).collect()
            }
        }
    };
}

toy_curve!(ToyG1);
toy_curve!(ToyG2);

impl TargetElem<ToyScalar> for ToyGt {
    fn identity() -> Self {
        ToyGt(ToyScalar(0))
    }

    fn is_identity(&self) -> bool {
        self.0 .0 == 0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ToyGroup;

impl Engine for ToyGroup {
    const GROUP_ID: &'static str = "toy-mersenne61";

    type Scalar = ToyScalar;
    type G1 = ToyG1;
    type G2 = ToyG2;
    type Gt = ToyGt;

    fn g1() -> ToyG1 {
        ToyG1(ToyScalar(1))
    }

    fn g2() -> ToyG2 {
        ToyG2(ToyScalar(1))
    }

    fn pairing(a: &ToyG1, b: &ToyG2) -> ToyGt {
        ToyGt(a.0 * b.0)
    }

    fn hash_to_g1(dst: &[u8], msg: &[u8]) -> ToyG1 {
        let digest = Sha256::new()
            .chain_update((dst.len() as u64).to_be_bytes())
            .chain_update(dst)
            .chain_update(msg)
            .finalize();
        ToyG1(ToyScalar::from_be_bytes_mod_order(&digest))
    }
}
