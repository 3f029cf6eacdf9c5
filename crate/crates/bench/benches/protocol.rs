// SPDX-License-Identifier: Apache-2.0

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sevdel_bench::Fixture;
use sevdel_core::bsgs::shared_table;
use sevdel_core::{
    audit_respond, outsource, verify_audit_response, verify_encryption_proof, Bls12, Engine, GroupElem, LeakedBlocks,
};

const SIZES: [usize; 2] = [1 << 10, 4 << 10];
const S: usize = 4;
const BITS: u32 = 16;
const CHALLENGE: usize = 64;

fn owner_side(c: &mut Criterion) {
    let mut g = c.benchmark_group("owner");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for size in SIZES {
        let mut f = Fixture::<Bls12>::new(size, S, BITS);
        g.throughput(Throughput::Bytes(size as u64));
        g.bench_with_input(BenchmarkId::new("tagging", size), &size, |b, _| {
            b.iter(|| outsource(f.cloud.params(), &f.owner, &f.manifest, &f.blocks, &mut f.rng).unwrap())
        });
        let ch = f.challenge(CHALLENGE);
        let proof = f
            .cloud
            .prove_encryption(&f.handle, &f.manifest, &f.blocks, &f.ct, &f.tags, &ch, &mut f.rng)
            .unwrap();
        g.bench_with_input(BenchmarkId::new("proof_verify", size), &size, |b, _| {
            b.iter(|| {
                verify_encryption_proof(
                    f.cloud.params(),
                    &f.manifest,
                    f.gens.public(),
                    f.owner.public(),
                    f.ct.key(),
                    &ch,
                    &proof,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

fn cloud_side(c: &mut Criterion) {
    let mut g = c.benchmark_group("cloud");
    g.sample_size(10).measurement_time(Duration::from_secs(5));
    for size in SIZES {
        let mut f = Fixture::<Bls12>::new(size, S, BITS);
        g.throughput(Throughput::Bytes(size as u64));
        g.bench_with_input(BenchmarkId::new("encryption", size), &size, |b, _| {
            b.iter(|| {
                f.cloud.delete_file(&f.manifest.file_id).unwrap();
                let h = f.cloud.receive_file(&f.manifest).unwrap();
                f.cloud.encrypt_file(&h, &f.manifest, &f.blocks, &mut f.rng).unwrap()
            })
        });
        let f = Fixture::<Bls12>::new(size, S, BITS);
        let ch = f.challenge(CHALLENGE);
        let mut rng = f.rng.clone();
        g.bench_with_input(BenchmarkId::new("proof_gen", size), &size, |b, _| {
            b.iter(|| {
                f.cloud
                    .prove_encryption(&f.handle, &f.manifest, &f.blocks, &f.ct, &f.tags, &ch, &mut rng)
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn audit(c: &mut Criterion) {
    let mut g = c.benchmark_group("audit");
    g.sample_size(10);
    let f = Fixture::<Bls12>::new(4 << 10, S, BITS);
    let sigma = f.cloud.gen_enc_tags(&f.manifest, &f.ct, f.gens.public()).unwrap();
    let ch = f.challenge(CHALLENGE);
    let resp = audit_respond(&f.manifest, &LeakedBlocks::all_of(&f.ct), &sigma, &ch).unwrap();
    g.bench_function("audit_verify", |b| {
        b.iter(|| verify_audit_response(f.cloud.params(), &f.manifest.file_id, f.gens.public(), f.cloud.public_key(), &ch, &resp))
    });
    g.finish();
}

fn dlog(c: &mut Criterion) {
    let mut g = c.benchmark_group("bsgs");
    g.sample_size(10);
    for bits in [16u32, 32] {
        let table = shared_table::<Bls12>(bits);
        let target = Bls12::g1().mul_u64((1u64 << bits) - 1);
        g.bench_with_input(BenchmarkId::new("solve_worst_case", bits), &bits, |b, _| {
            b.iter(|| table.solve(&target).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, owner_side, cloud_side, audit, dlog);
criterion_main!(benches);
