// SPDX-License-Identifier: Apache-2.0

//! Declarative scenarios: a party setup, a timeline of actions at logical
//! times, injected faults and the verdicts the run is expected to produce.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sevdel_core::{Bls12, Deadlines, Engine, ToyGroup};

use crate::error::{CliError, Result};
use crate::session::{Session, SessionConfig};
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Service,
    Agree,
    Outsource,
    Encrypt,
    Register,
    Verify,
    Decrypt,
    Claim,
    Delete,
    Audit,
    Refund,
    Penalty,
    Timer,
}

impl Action {
    pub fn name(self) -> String {
        serde_json::to_value(self).expect("unit variant").as_str().expect("string").to_string()
    }
}

/// Deviations from honest behaviour. Block numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fault {
    /// The server stores this block in the clear instead of encrypting it.
    SkipEncryption { block: u64 },
    /// The server alters this block after the owner tagged it.
    TamperBlock { block: u64 },
    /// The ciphertexts escape the server before deletion and reach the owner.
    LeakCiphertexts,
    /// The server is asked to delete the file a second time.
    DoubleDelete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    pub name: String,
    pub balance: u64,
    pub stake: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractSetup {
    pub provider_balance: u64,
    pub deposit: u64,
    /// The first owner outsources the file and runs the audits.
    pub owners: Vec<Party>,
    pub deadlines: Deadlines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expected {
    Accept,
    Reject,
    /// The owner holds no ciphertext and cannot answer a challenge.
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Settlement {
    Refund,
    Penalty,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<Expected>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<Expected>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settlement: Option<Settlement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_trip: Option<bool>,
    /// Error code every post-delete probe must fail with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_delete: Option<String>,
    /// Exact final balances.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub balances: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    #[serde(default = "default_group")]
    pub group: String,
    pub file_size: usize,
    pub s: usize,
    pub sector_bits: u32,
    pub challenge_count: usize,
    pub contract: ContractSetup,
    pub timeline: Vec<(u64, Action)>,
    #[serde(default)]
    pub fault_injections: Vec<Fault>,
    #[serde(default)]
    pub expect: Expectations,
}

fn default_group() -> String {
    Bls12::GROUP_ID.to_string()
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::ScenarioInvalid(msg.into())
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| invalid(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn config(&self) -> SessionConfig {
        SessionConfig {
            seed: self.seed,
            file_size: self.file_size,
            s: self.s,
            sector_bits: self.sector_bits,
            challenge_count: self.challenge_count,
        }
    }

    /// Structural checks plus the deadline window of every contract action.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(invalid("empty name"));
        }
        if self.group != Bls12::GROUP_ID && self.group != ToyGroup::GROUP_ID {
            return Err(invalid(format!("unknown group {:?}", self.group)));
        }
        if self.file_size == 0 || self.s == 0 || self.challenge_count == 0 {
            return Err(invalid("file_size, s and challenge_count must be positive"));
        }
        let n = self.config().blocks()?;
        if self.challenge_count > n {
            return Err(invalid(format!("challenge_count {} exceeds {n} blocks", self.challenge_count)));
        }
        for f in &self.fault_injections {
            if let Fault::SkipEncryption { block } | Fault::TamperBlock { block } = f {
                if *block == 0 || *block > n as u64 {
                    return Err(invalid(format!("fault block {block} outside 1..={n}")));
                }
            }
        }
        let c = &self.contract;
        if c.owners.is_empty() {
            return Err(invalid("no owners"));
        }
        let d = Deadlines::new(c.deadlines.t1, c.deadlines.t2, c.deadlines.t3, c.deadlines.t4)
            .map_err(|e| invalid(e.to_string()))?;
        let mut last = 0;
        for &(t, action) in &self.timeline {
            if t < last {
                return Err(invalid(format!("timeline goes back to {t} at {}", action.name())));
            }
            last = t;
            let ok = match action {
                Action::Service => t <= d.t1,
                Action::Agree => (d.t1..=d.t2).contains(&t),
                Action::Register => t <= d.t3,
                Action::Claim => t == d.t2,
                Action::Audit => (d.t2..=d.t3).contains(&t),
                Action::Refund | Action::Penalty => (d.t3..=d.t4).contains(&t),
                Action::Timer => t > d.t4,
                _ => true,
            };
            if !ok {
                return Err(invalid(format!("{} at t={t} is outside its window", action.name())));
            }
        }
        Ok(())
    }
}

/// Expected-versus-actual for one expectation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub transcript: Transcript,
    pub checks: Vec<Check>,
    pub balances: BTreeMap<String, u64>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    /// Process exit code: 0 iff every expectation held.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Run a scenario single-threaded on its declared group.
pub fn run_scenario(sc: &Scenario) -> Result<Outcome> {
    sc.validate()?;
    if sc.group == ToyGroup::GROUP_ID {
        run_on::<ToyGroup>(sc)
    } else {
        run_on::<Bls12>(sc)
    }
}

fn run_on<E: Engine>(sc: &Scenario) -> Result<Outcome> {
    let mut session = Session::<E>::new(sc.config(), sc.contract.clone(), sc.fault_injections.clone())?;
    session.begin(&sc.name);
    for &(t, action) in &sc.timeline {
        session.step(t, action)?;
    }
    Ok(session.finish(&sc.expect))
}
