// SPDX-License-Identifier: Apache-2.0

//! Baby-step/giant-step discrete logarithm over a bounded exponent range.
//!
//! Lifted ElGamal recovers `g^m`, so decryption ends with a discrete log of
//! `m < 2^sector_bits`. Tables are built once per `(engine, sector_bits)`
//! and shared across the process.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use parking_lot::Mutex;

use crate::group::{Engine, GroupElem};

/// Points normalized per batch while building the table.
const BATCH: usize = 1 << 12;
/// Giant steps per batch; small enough that an early hit saves most work.
const GIANT_BATCH: usize = 1 << 8;

pub struct BsgsTable<E: Engine> {
    bits: u32,
    /// Number of baby steps `m`.
    baby: u64,
    giants: u64,
    table: HashMap<u64, u32>,
    /// `g * m`.
    stride: E::G1,
}

impl<E: Engine> BsgsTable<E> {
    /// Baby-step count `2^(bits/2 + 4)` (capped at `2^bits`), which trades
    /// memory for fewer giant steps on 32-bit sectors.
    pub fn new(bits: u32) -> Self {
        assert!((1..=32).contains(&bits), "unsupported dlog range 2^{bits}");
        let baby_bits = (bits.div_ceil(2) + 4).min(bits);
        Self::with_baby_bits(bits, baby_bits)
    }

    pub fn with_baby_bits(bits: u32, baby_bits: u32) -> Self {
        let baby = 1u64 << baby_bits;
        let giants = (1u64 << bits).div_ceil(baby);
        let g = E::g1();
        let mut table = HashMap::with_capacity(baby as usize);
        let mut cur = E::G1::identity();
        let mut chunk = Vec::with_capacity(BATCH);
        let mut j = 0u64;
        while j < baby {
            chunk.clear();
            for _ in 0..BATCH.min((baby - j) as usize) {
                chunk.push(cur);
                cur += g;
            }
            for (k, fp) in E::G1::fingerprints(&chunk).into_iter().enumerate() {
                table.entry(fp).or_insert((j + k as u64) as u32);
            }
            j += chunk.len() as u64;
        }
        BsgsTable {
            bits,
            baby,
            giants,
            table,
            stride: g.mul_u64(baby),
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `m` with `g * m == target` and `m < 2^bits`, if one exists.
    pub fn solve(&self, target: &E::G1) -> Option<u64> {
        let g = E::g1();
        let bound = 1u64 << self.bits;
        let mut cur = *target;
        let mut chunk = Vec::with_capacity(GIANT_BATCH);
        let mut k = 0u64;
        while k < self.giants {
            chunk.clear();
            for _ in 0..GIANT_BATCH.min((self.giants - k) as usize) {
                chunk.push(cur);
                cur = cur - self.stride;
            }
            for (off, fp) in E::G1::fingerprints(&chunk).into_iter().enumerate() {
                if let Some(&j) = self.table.get(&fp) {
                    let m = (k + off as u64) * self.baby + j as u64;
                    // Fingerprints only match x-coordinates; confirm.
                    if m < bound && g.mul_u64(m) == *target {
                        return Some(m);
                    }
                }
            }
            k += chunk.len() as u64;
        }
        None
    }
}

type Cache = Mutex<HashMap<(TypeId, u32), Arc<dyn Any + Send + Sync>>>;

/// Process-wide table for `E` and `bits`, built on first use.
pub fn shared_table<E: Engine>(bits: u32) -> Arc<BsgsTable<E>> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (TypeId::of::<E>(), bits);
    if let Some(t) = cache.lock().get(&key) {
        return t.clone().downcast().expect("cache keyed by engine type");
    }
    // Built outside the lock; a racing builder just wastes work.
    let built = Arc::new(BsgsTable::<E>::new(bits));
    cache
        .lock()
        .entry(key)
        .or_insert(built)
        .clone()
        .downcast()
        .expect("cache keyed by engine type")
}
