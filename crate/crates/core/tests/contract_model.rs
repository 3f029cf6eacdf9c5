// SPDX-License-Identifier: Apache-2.0

//! Exhaustive exploration of contract operation sequences on a small
//! timeline, checking conservation, windows and legal transitions.

use std::collections::HashSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sevdel_core::{
    audit_respond, outsource, split, Blockchain, CiphertextMatrix, CloudServer, ContractId, ContractState,
    Deadlines, EnclaveRegistry, EncTagSet, Engine, FileManifest, LeakedBlocks, LogicalClock, OwnerKeyPair,
    ServerKeyPair, SystemParams, ToyGroup,
};

type E = ToyGroup;

const D: Deadlines = Deadlines {
    t1: 1,
    t2: 2,
    t3: 3,
    t4: 4,
};
const ACCOUNTS: [&str; 3] = ["provider", "alice", "bob"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Tick,
    Service,
    AgreeAlice,
    AgreeBob,
    Register,
    Claim,
    AuditLeak,
    AuditForged,
    Refund,
    Penalty,
    Timer,
}

const OPS: [Op; 11] = [
    Op::Tick,
    Op::Service,
    Op::AgreeAlice,
    Op::AgreeBob,
    Op::Register,
    Op::Claim,
    Op::AuditLeak,
    Op::AuditForged,
    Op::Refund,
    Op::Penalty,
    Op::Timer,
];

struct World {
    server_pk: <E as Engine>::G2,
    manifest: FileManifest,
    u: Vec<<E as Engine>::G1>,
    ct: CiphertextMatrix<E>,
    sigma: EncTagSet<E>,
}

fn world() -> World {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let cloud = CloudServer::<E>::new(
        SystemParams::new(8).unwrap(),
        ServerKeyPair::generate(&mut rng),
        Arc::new(EnclaveRegistry::new(LogicalClock::new())),
    );
    let (manifest, blocks) = split("alice", "f", &[1, 2, 3, 4, 5, 6], 2, 8).unwrap();
    let owner = OwnerKeyPair::generate(&mut rng);
    let (gens, _) = outsource(cloud.params(), &owner, &manifest, &blocks, &mut rng).unwrap();
    let h = cloud.receive_file(&manifest).unwrap();
    let ct = cloud.encrypt_file(&h, &manifest, &blocks, &mut rng).unwrap();
    let sigma = cloud.gen_enc_tags(&manifest, &ct, gens.public()).unwrap();
    World {
        server_pk: *cloud.public_key(),
        manifest,
        u: gens.public().to_vec(),
        ct,
        sigma,
    }
}

fn apply(w: &World, chain: &mut Blockchain<E>, id: ContractId, op: Op) -> bool {
    match op {
        Op::Tick => {
            let t = chain.clock().now();
            chain.clock().advance_to(t + 1).is_ok()
        }
        Op::Service => chain.service(id, "provider", "N", &w.server_pk, 60, D).is_ok(),
        Op::AgreeAlice => chain.agree(id, "alice", "N", 30).is_ok(),
        Op::AgreeBob => chain.agree(id, "bob", "N", 10).is_ok(),
        Op::Register => chain.register_tags(id, "N", &w.manifest.file_id, &w.u, &w.sigma.tags).is_ok(),
        Op::Claim => chain.claim(id, "N").is_ok(),
        Op::AuditLeak | Op::AuditForged => match chain.audit_challenge(id, "alice", 2) {
            Err(_) => false,
            Ok(ch) => {
                let mut resp = audit_respond(&w.manifest, &LeakedBlocks::all_of(&w.ct), &w.sigma, &ch).unwrap();
                if op == Op::AuditForged {
                    resp.q2 += E::g1();
                }
                let verdict = chain.audit_verify(id, "alice", &resp).unwrap();
                assert_eq!(verdict.is_accept(), op == Op::AuditLeak);
                true
            }
        },
        Op::Refund => chain.refund(id).is_ok(),
        Op::Penalty => chain.penalty(id).is_ok(),
        Op::Timer => chain.timer(id).is_ok(),
    }
}

fn key(chain: &Blockchain<E>, id: ContractId, history: (bool, bool)) -> String {
    let c = chain.contract(id).unwrap();
    let owners: Vec<_> = c.owners.iter().map(|(k, o)| (k.clone(), o.stake, o.state)).collect();
    let balances: Vec<u64> = ACCOUNTS.iter().map(|a| chain.ledger().balance(a)).collect();
    format!(
        "{}|{}|{:?}|{:?}|{}|{}|{}|{:?}",
        chain.clock().now(),
        c.state,
        owners,
        balances,
        chain.ledger().escrow(id),
        c.registered.is_some(),
        c.is_settled(),
        history
    )
}

fn window_ok(op: Op, before: ContractState, now: u64) -> bool {
    use ContractState::*;
    match op {
        Op::Tick => true,
        Op::Service => now <= D.t1 && before == Init,
        Op::AgreeAlice | Op::AgreeBob => (D.t1..=D.t2).contains(&now) && matches!(before, Created | Accepted),
        Op::Register => now <= D.t3 && matches!(before, Created | Accepted | Claimed),
        Op::Claim => now == D.t2 && before == Accepted,
        Op::AuditLeak | Op::AuditForged => (D.t2..=D.t3).contains(&now) && before == Claimed,
        Op::Refund => (D.t3..=D.t4).contains(&now) && matches!(before, Created | Accepted | Claimed),
        Op::Penalty => (D.t3..=D.t4).contains(&now) && before == Claimed,
        Op::Timer => now > D.t4 && before == Aborted,
    }
}

fn legal_after(op: Op, before: ContractState, after: ContractState) -> bool {
    use ContractState::*;
    match op {
        Op::Tick | Op::Register | Op::AuditLeak | Op::AuditForged | Op::Timer => after == before,
        Op::Service => after == Created,
        Op::AgreeAlice | Op::AgreeBob => after == Accepted,
        Op::Claim => after == Claimed,
        Op::Refund => after == Finished,
        Op::Penalty => after == Aborted,
    }
}

struct Stats {
    states: usize,
    refunds: usize,
    penalties: usize,
    timers: usize,
}

fn explore(
    w: &World,
    chain: &Blockchain<E>,
    id: ContractId,
    total: u128,
    history: (bool, bool),
    seen: &mut HashSet<String>,
    stats: &mut Stats,
) {
    if !seen.insert(key(chain, id, history)) {
        return;
    }
    stats.states += 1;
    for op in OPS {
        if op == Op::Tick && chain.clock().now() > D.t4 {
            continue;
        }
        let mut next = chain.fork();
        let before = next.contract(id).unwrap().state;
        let now = next.clock().now();
        let log_len = next.log().len();
        let balances: Vec<u64> = ACCOUNTS.iter().map(|a| next.ledger().balance(a)).collect();
        let ok = apply(w, &mut next, id, op);
        assert_eq!(next.ledger().total(), total, "{op:?} broke conservation");
        let after = next.contract(id).unwrap().state;
        if !ok {
            assert_eq!(after, before, "{op:?} failed but moved state");
            assert_eq!(next.log().len(), log_len, "{op:?} failed but logged");
            let now_bal: Vec<u64> = ACCOUNTS.iter().map(|a| next.ledger().balance(a)).collect();
            assert_eq!(now_bal, balances, "{op:?} failed but moved funds");
            continue;
        }
        assert!(window_ok(op, before, now), "{op:?} ran at t={now} from {before}");
        assert!(legal_after(op, before, after), "{op:?}: {before} -> {after}");
        let mut h = history;
        match op {
            Op::Refund => {
                assert!(!history.1, "refund after penalty");
                assert_eq!(next.ledger().escrow(id), 0);
                assert_eq!(next.ledger().balance("provider"), 100);
                stats.refunds += 1;
                h.0 = true;
            }
            Op::Penalty => {
                assert!(!history.0, "penalty after refund");
                let c = next.contract(id).unwrap();
                assert!(c.successful_auditors().count() > 0);
                stats.penalties += 1;
                h.1 = true;
            }
            Op::Timer => {
                assert_eq!(next.ledger().escrow(id), 0);
                stats.timers += 1;
            }
            _ => {}
        }
        explore(w, &next, id, total, h, seen, stats);
    }
}

#[test]
fn every_reachable_sequence_respects_the_rules() {
    let w = world();
    let mut chain = Blockchain::new(SystemParams::<E>::new(8).unwrap(), LogicalClock::new());
    chain.fund("provider", 100);
    chain.fund("alice", 50);
    chain.fund("bob", 50);
    let id = chain.init();
    let total = chain.ledger().total();
    let mut seen = HashSet::new();
    let mut stats = Stats {
        states: 0,
        refunds: 0,
        penalties: 0,
        timers: 0,
    };
    explore(&w, &chain, id, total, (false, false), &mut seen, &mut stats);
    assert!(stats.states > 50, "explored only {} states", stats.states);
    assert!(stats.refunds > 0 && stats.penalties > 0 && stats.timers > 0);
}

#[test]
fn penalty_share_matches_integer_oracle() {
    // Every reachable penalty pays alice floor(60 * 30 / 40) = 45 and bob
    // gets his stake back when he never audited.
    let w = world();
    let clock = LogicalClock::new();
    let mut chain = Blockchain::new(SystemParams::<E>::new(8).unwrap(), clock.clone());
    chain.fund("provider", 100);
    chain.fund("alice", 50);
    chain.fund("bob", 50);
    let id = chain.init();
    for op in [Op::Service, Op::Tick, Op::AgreeAlice, Op::AgreeBob, Op::Register, Op::Tick, Op::Claim, Op::AuditLeak, Op::Tick] {
        assert!(apply(&w, &mut chain, id, op), "{op:?}");
    }
    let shares = chain.penalty(id).unwrap();
    assert_eq!(shares["alice"], 60 * 30 / 40);
    assert_eq!(chain.ledger().balance("alice"), 50 + 45);
    assert_eq!(chain.ledger().balance("bob"), 50);
    assert_eq!(chain.ledger().escrow(id), 15);
}
