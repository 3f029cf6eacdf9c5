// SPDX-License-Identifier: Apache-2.0

//! Single-stage commands and the four canonical scenarios.
//!
//! Every verb replays the canonical timeline from the seed up to and
//! including its own stage, then writes the artifacts produced so far.

use std::collections::BTreeMap;
use std::path::Path;

use sevdel_core::{Bls12, Deadlines, Engine, ToyGroup};

use crate::error::{CliError, Result};
use crate::scenario::{Action, ContractSetup, Expectations, Expected, Fault, Outcome, Party, Scenario, Settlement};
use crate::session::{Session, SessionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Setup,
    Outsource,
    Encrypt,
    Verify,
    Delete,
    Audit,
}

pub const DEADLINES: Deadlines = Deadlines {
    t1: 10,
    t2: 20,
    t3: 30,
    t4: 40,
};

/// Provider with 1000 units escrowing 600; alice (stake 30) owns the file,
/// bob (stake 10) is a second subscriber.
pub fn canonical_contract() -> ContractSetup {
    ContractSetup {
        provider_balance: 1000,
        deposit: 600,
        owners: vec![
            Party {
                name: "alice".into(),
                balance: 100,
                stake: 30,
            },
            Party {
                name: "bob".into(),
                balance: 100,
                stake: 10,
            },
        ],
        deadlines: DEADLINES,
    }
}

fn prefix() -> Vec<(u64, Action)> {
    vec![
        (0, Action::Service),
        (10, Action::Agree),
        (10, Action::Outsource),
        (10, Action::Encrypt),
        (10, Action::Register),
        (10, Action::Verify),
        (10, Action::Decrypt),
        (20, Action::Claim),
        (20, Action::Delete),
    ]
}

pub fn timeline(verb: Verb) -> Vec<(u64, Action)> {
    let upto = match verb {
        Verb::Setup => 1,
        Verb::Outsource => 3,
        Verb::Encrypt => 5,
        Verb::Verify => 7,
        Verb::Delete => 9,
        Verb::Audit => {
            let mut t = prefix();
            t.extend([(25, Action::Audit), (30, Action::Penalty), (41, Action::Timer)]);
            return t;
        }
    };
    prefix()[..upto].to_vec()
}

/// Run one verb and write its artifacts plus `transcript.jsonl` to `out`.
pub fn run_verb(verb: Verb, mut cfg: SessionConfig, group: &str, input: Option<Vec<u8>>, out: &Path) -> Result<Outcome> {
    if let Some(d) = &input {
        cfg.file_size = d.len();
    }
    if group == ToyGroup::GROUP_ID {
        run_verb_on::<ToyGroup>(verb, cfg, input, out)
    } else if group == Bls12::GROUP_ID {
        run_verb_on::<Bls12>(verb, cfg, input, out)
    } else {
        Err(CliError::ScenarioInvalid(format!("unknown group {group:?}")))
    }
}

fn run_verb_on<E: Engine>(verb: Verb, cfg: SessionConfig, input: Option<Vec<u8>>, out: &Path) -> Result<Outcome> {
    let faults = if verb == Verb::Audit {
        vec![Fault::LeakCiphertexts]
    } else {
        vec![]
    };
    let mut session = Session::<E>::new(cfg, canonical_contract(), faults)?;
    if let Some(d) = input {
        session.set_data(d);
    }
    session.begin(&format!("{verb:?}").to_lowercase());
    for (t, action) in timeline(verb) {
        session.step(t, action)?;
    }
    session.write_artifacts(out)?;
    let outcome = session.finish(&Expectations::default());
    let path = out.join("transcript.jsonl");
    std::fs::write(&path, outcome.transcript.to_jsonl()).map_err(|source| CliError::Io {
        context: format!("write {}", path.display()),
        source,
    })?;
    Ok(outcome)
}

/// The regression corpus, one scenario per correctness property: honest
/// round trip, skipped encryption, deletion, and leak with penalty.
pub fn canonical_scenarios() -> Vec<Scenario> {
    let base = |name: &str, seed: u64| Scenario {
        name: name.into(),
        seed,
        group: Bls12::GROUP_ID.into(),
        file_size: 2048,
        s: 4,
        sector_bits: 16,
        challenge_count: 16,
        contract: canonical_contract(),
        timeline: vec![],
        fault_injections: vec![],
        expect: Expectations::default(),
    };
    let balances = |p: u64, a: u64, b: u64| BTreeMap::from([("provider".into(), p), ("alice".into(), a), ("bob".into(), b)]);

    let mut honest = base("honest", 1);
    honest.timeline = prefix();
    honest.timeline.push((30, Action::Refund));
    honest.expect = Expectations {
        verify: Some(Expected::Accept),
        round_trip: Some(true),
        settlement: Some(Settlement::Refund),
        balances: balances(1000, 100, 100),
        ..Default::default()
    };

    let mut skip = base("skip-encryption", 2);
    // 2048 bytes over 8-byte blocks gives 256 blocks; challenge all of them.
    skip.challenge_count = 256;
    skip.fault_injections = vec![Fault::SkipEncryption { block: 77 }];
    skip.timeline = prefix()[..6].to_vec();
    skip.expect = Expectations {
        verify: Some(Expected::Reject),
        ..Default::default()
    };

    let mut delete = base("delete", 3);
    delete.fault_injections = vec![Fault::DoubleDelete];
    delete.timeline = prefix();
    delete.timeline.extend([(25, Action::Audit), (30, Action::Refund)]);
    delete.expect = Expectations {
        verify: Some(Expected::Accept),
        post_delete: Some("enclave-destroyed".into()),
        audit: Some(Expected::Unavailable),
        settlement: Some(Settlement::Refund),
        balances: balances(1000, 100, 100),
        ..Default::default()
    };

    let mut leak = base("leak-audit", 4);
    leak.fault_injections = vec![Fault::LeakCiphertexts];
    leak.timeline = timeline(Verb::Audit);
    // alice: floor(600 * 30 / 40) = 450 plus her stake back; bob refunded;
    // provider keeps the 150 residual after the timer.
    leak.expect = Expectations {
        verify: Some(Expected::Accept),
        audit: Some(Expected::Accept),
        settlement: Some(Settlement::Penalty),
        balances: balances(550, 550, 100),
        ..Default::default()
    };

    vec![honest, skip, delete, leak]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_scenarios_validate() {
        for sc in canonical_scenarios() {
            sc.validate().unwrap();
        }
    }

    #[test]
    fn verb_timelines_grow() {
        let verbs = [Verb::Setup, Verb::Outsource, Verb::Encrypt, Verb::Verify, Verb::Delete, Verb::Audit];
        let lens: Vec<usize> = verbs.iter().map(|v| timeline(*v).len()).collect();
        assert!(lens.windows(2).all(|w| w[0] < w[1]), "{lens:?}");
    }
}
