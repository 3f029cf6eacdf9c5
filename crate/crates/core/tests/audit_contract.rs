// SPDX-License-Identifier: Apache-2.0

//! Leakage audits arbitrated by the contract, end to end.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sevdel_core::audit::RevealedBlock;
use sevdel_core::{
    audit_respond, outsource, split, AuditResponse, Blockchain, Bls12, CiphertextMatrix, CloudServer,
    ContractId, ContractState, Deadlines, EnclaveRegistry, EncTagSet, Engine, FileManifest, GroupElem,
    LeakedBlocks, LogicalClock, OwnerKeyPair, ScalarField, ServerKeyPair, SystemParams, ToyGroup, Verdict,
};

const D: Deadlines = Deadlines {
    t1: 5,
    t2: 10,
    t3: 20,
    t4: 30,
};

struct Deal<E: Engine> {
    chain: Blockchain<E>,
    id: ContractId,
    manifest: FileManifest,
    ct: CiphertextMatrix<E>,
    sigma: EncTagSet<E>,
}

/// Provider 1000, alice 100 (stake 40), bob 100 (stake 10); deposit 500.
fn deal<E: Engine>(seed: u64) -> Deal<E> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let clock = LogicalClock::new();
    let params = SystemParams::<E>::new(16).unwrap();
    let cloud = CloudServer::new(
        params.clone(),
        ServerKeyPair::generate(&mut rng),
        Arc::new(EnclaveRegistry::new(clock.clone())),
    );
    let mut chain = Blockchain::new(params, clock.clone());
    chain.fund("provider", 1000);
    chain.fund("alice", 100);
    chain.fund("bob", 100);
    let id = chain.init();
    chain.service(id, "provider", "N", cloud.public_key(), 500, D).unwrap();
    clock.advance_to(D.t1).unwrap();
    chain.agree(id, "alice", "N", 40).unwrap();
    chain.agree(id, "bob", "N", 10).unwrap();

    let data: Vec<u8> = (0..120u8).collect();
    let (manifest, blocks) = split("alice", "doc", &data, 3, 16).unwrap();
    let owner = OwnerKeyPair::generate(&mut rng);
    let (gens, _) = outsource(cloud.params(), &owner, &manifest, &blocks, &mut rng).unwrap();
    let h = cloud.receive_file(&manifest).unwrap();
    let ct = cloud.encrypt_file(&h, &manifest, &blocks, &mut rng).unwrap();
    let sigma = cloud.gen_enc_tags(&manifest, &ct, gens.public()).unwrap();
    chain
        .register_tags(id, "N", &manifest.file_id, gens.public(), &sigma.tags)
        .unwrap();
    clock.advance_to(D.t2).unwrap();
    chain.claim(id, "N").unwrap();
    cloud.delete_file(&manifest.file_id).unwrap();
    Deal {
        chain,
        id,
        manifest,
        ct,
        sigma,
    }
}

#[test]
fn leaked_ciphertext_triggers_exact_penalty() {
    let mut d = deal::<Bls12>(1);
    let total = d.chain.ledger().total();
    let ch = d.chain.audit_challenge(d.id, "alice", 5).unwrap();
    let resp = audit_respond(&d.manifest, &LeakedBlocks::all_of(&d.ct), &d.sigma, &ch).unwrap();
    assert_eq!(d.chain.audit_verify(d.id, "alice", &resp).unwrap(), Verdict::Accept);
    assert_eq!(d.chain.ledger().balance("alice"), 100);

    d.chain.clock().advance_to(D.t3).unwrap();
    let shares = d.chain.penalty(d.id).unwrap();
    // floor(500 * 40 / 50)
    assert_eq!(shares["alice"], 400);
    assert_eq!(d.chain.ledger().balance("alice"), 500);
    assert_eq!(d.chain.ledger().balance("bob"), 100);
    assert_eq!(d.chain.ledger().balance("provider"), 500);
    assert_eq!(d.chain.ledger().escrow(d.id), 100);
    assert_eq!(d.chain.contract(d.id).unwrap().state, ContractState::Aborted);
    assert!(d.chain.refund(d.id).is_err());

    d.chain.clock().advance_to(D.t4 + 1).unwrap();
    assert_eq!(d.chain.timer(d.id).unwrap(), 100);
    assert_eq!(d.chain.ledger().balance("provider"), 600);
    assert_eq!(d.chain.ledger().total(), total);
}

#[test]
fn no_leak_refunds_exactly() {
    let mut d = deal::<ToyGroup>(2);
    d.chain.clock().advance_to(D.t3).unwrap();
    assert!(d.chain.penalty(d.id).is_err());
    d.chain.refund(d.id).unwrap();
    for (acct, bal) in [("provider", 1000), ("alice", 100), ("bob", 100)] {
        assert_eq!(d.chain.ledger().balance(acct), bal);
    }
    assert_eq!(d.chain.ledger().escrow(d.id), 0);
}

#[test]
fn forged_sigma_is_rejected() {
    let mut d = deal::<Bls12>(3);
    let ch = d.chain.audit_challenge(d.id, "alice", 3).unwrap();
    let mut sigma = d.sigma.clone();
    let i = ch.entries[0].index as usize - 1;
    sigma.tags[i] += Bls12::g1();
    let resp = audit_respond(&d.manifest, &LeakedBlocks::all_of(&d.ct), &sigma, &ch).unwrap();
    assert!(!d.chain.audit_verify(d.id, "alice", &resp).unwrap().is_accept());
    assert_eq!(d.chain.ledger().balance("alice"), 60);
    // The challenge was consumed; a retry needs a fresh one.
    assert!(d.chain.audit_verify(d.id, "alice", &resp).is_err());
}

#[test]
fn guessing_without_ciphertexts_never_passes() {
    let mut d = deal::<ToyGroup>(4);
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let s = d.manifest.s;
    let rand_point = |rng: &mut ChaCha20Rng| ToyGroup::g1() * <ToyGroup as Engine>::Scalar::random(rng);
    for _ in 0..1000 {
        let ch = d.chain.audit_challenge(d.id, "bob", 2).unwrap();
        let revealed: Vec<RevealedBlock<ToyGroup>> = ch
            .indices()
            .map(|index| RevealedBlock {
                index,
                sectors: (0..s).map(|_| (rand_point(&mut rng), rand_point(&mut rng))).collect(),
            })
            .collect();
        let coeffs = ch.coeffs();
        let q1 = (0..s)
            .map(|j| {
                let a: Vec<_> = revealed.iter().map(|b| b.sectors[j].0).collect();
                let b: Vec<_> = revealed.iter().map(|b| b.sectors[j].1).collect();
                (GroupElem::msm(&a, &coeffs), GroupElem::msm(&b, &coeffs))
            })
            .collect();
        let resp = AuditResponse {
            q1,
            q2: rand_point(&mut rng),
            revealed,
        };
        assert!(!d.chain.audit_verify(d.id, "bob", &resp).unwrap().is_accept());
    }
    assert_eq!(d.chain.ledger().balance("bob"), 90);
}

#[test]
fn plaintext_only_owner_cannot_respond() {
    let mut d = deal::<ToyGroup>(5);
    let ch = d.chain.audit_challenge(d.id, "alice", 2).unwrap();
    let err = audit_respond(&d.manifest, &LeakedBlocks::new(), &d.sigma, &ch).unwrap_err();
    assert_eq!(err.code(), "missing-block");
}

#[test]
fn singleton_audit_aggregates_to_the_block() {
    let d = deal::<ToyGroup>(6);
    let ch = sevdel_core::Challenge {
        entries: vec![sevdel_core::ChallengeEntry {
            index: 2,
            coeff: ScalarField::one(),
        }],
        nonce: vec![],
    };
    let resp = audit_respond(&d.manifest, &LeakedBlocks::all_of(&d.ct), &d.sigma, &ch).unwrap();
    assert_eq!(resp.q1, d.ct.row(1).to_vec());
    assert_eq!(resp.q2, d.sigma.tags[1]);
}

#[test]
fn audit_outside_window_or_by_stranger() {
    let mut d = deal::<ToyGroup>(7);
    assert_eq!(d.chain.audit_challenge(d.id, "mallory", 2).unwrap_err().code(), "unknown-owner");
    d.chain.clock().advance_to(D.t3 + 1).unwrap();
    assert_eq!(d.chain.audit_challenge(d.id, "alice", 2).unwrap_err().code(), "wrong-window");
}
