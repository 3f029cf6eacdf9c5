// SPDX-License-Identifier: Apache-2.0

//! Wall-clock measurements per protocol phase, reported as CSV.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use sevdel_core::{
    audit_respond, gen_challenge, outsource, split, verify_audit_response, verify_encryption_proof, CloudServer,
    EnclaveRegistry, Engine, LeakedBlocks, LogicalClock, OwnerKeyPair, ServerKeyPair, SystemParams,
};

use crate::error::{Context, Result};

pub const PHASES: [&str; 5] = ["tagging", "encryption", "proof_gen", "proof_verify", "audit_verify"];

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub seed: u64,
    pub reps: usize,
    pub s: usize,
    pub sector_bits: u32,
    pub challenge_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub file_size: usize,
    pub phase: String,
    pub reps: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    /// Serialized proof of encryption, identical across phases of a size.
    pub proof_bytes: usize,
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[Duration], p: f64) -> Duration {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn timed<T>(samples: &mut Vec<Duration>, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    samples.push(start.elapsed());
    out
}

/// Measure every phase for every file size. The challenge count is capped
/// at the number of blocks.
pub fn bench<E: Engine>(sizes: &[usize], cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &size in sizes {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ size as u64);
        let mut data = vec![0u8; size];
        rng.fill_bytes(&mut data);
        let params = SystemParams::<E>::new(cfg.sector_bits).context(|| "params".into())?;
        let cloud = CloudServer::new(
            params,
            ServerKeyPair::generate(&mut rng),
            Arc::new(EnclaveRegistry::new(LogicalClock::new())),
        );
        let owner = OwnerKeyPair::generate(&mut rng);
        let (m, b) = split("bench", "file", &data, cfg.s, cfg.sector_bits).context(|| "split".into())?;
        let count = cfg.challenge_count.min(m.n);

        let mut samples: Vec<Vec<Duration>> = vec![Vec::new(); PHASES.len()];
        let mut proof_bytes = 0;
        for rep in 0..cfg.reps.max(1) {
            let (gens, tags) = timed(&mut samples[0], || outsource(cloud.params(), &owner, &m, &b, &mut rng))
                .context(|| "outsource".into())?;
            let h = cloud.receive_file(&m).context(|| "receive".into())?;
            let ct = timed(&mut samples[1], || cloud.encrypt_file(&h, &m, &b, &mut rng)).context(|| "encrypt".into())?;
            let ch = gen_challenge(&m, count, rep as u64).context(|| "challenge".into())?;
            let proof = timed(&mut samples[2], || cloud.prove_encryption(&h, &m, &b, &ct, &tags, &ch, &mut rng))
                .context(|| "prove".into())?;
            proof_bytes = proof.encoded_len();
            let verdict = timed(&mut samples[3], || {
                verify_encryption_proof(cloud.params(), &m, gens.public(), owner.public(), ct.key(), &ch, &proof)
            })
            .context(|| "verify".into())?;
            assert!(verdict.is_accept(), "honest proof rejected in bench");

            let sigma = cloud.gen_enc_tags(&m, &ct, gens.public()).context(|| "enc tags".into())?;
            let resp = audit_respond(&m, &LeakedBlocks::all_of(&ct), &sigma, &ch).context(|| "audit".into())?;
            let verdict = timed(&mut samples[4], || {
                verify_audit_response(cloud.params(), &m.file_id, gens.public(), cloud.public_key(), &ch, &resp)
            });
            assert!(verdict.is_accept(), "leaked ciphertexts failed the audit in bench");
            cloud.delete_file(&m.file_id).context(|| "delete".into())?;
        }
        for (phase, mut s) in PHASES.iter().zip(samples) {
            s.sort();
            rows.push(BenchRow {
                file_size: size,
                phase: phase.to_string(),
                reps: s.len(),
                median_ms: ms(percentile(&s, 50.0)),
                p95_ms: ms(percentile(&s, 95.0)),
                proof_bytes,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["file_size", "phase", "reps", "median_ms", "p95_ms", "proof_bytes"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
