// SPDX-License-Identifier: Apache-2.0

//! In-process simulation of the deletion-insurance smart contract.
//!
//! A provider escrows a deposit, owners escrow stakes, and after the claim
//! an owner that proves possession of ciphertext for the file (a leakage
//! audit) is paid out of the deposit. Every transition is logged.
//!
//! Time windows, with `T1 < T2 < T3 < T4`:
//!
//! | op              | window            | state                         |
//! |-----------------|-------------------|-------------------------------|
//! | `service`       | `now <= T1`       | INIT -> CREATED               |
//! | `agree`         | `T1..=T2`         | CREATED/ACCEPTED -> ACCEPTED  |
//! | `register_tags` | `now <= T3`       | CREATED/ACCEPTED/CLAIMED      |
//! | `claim`         | `now == T2`       | ACCEPTED -> CLAIMED           |
//! | `audit_*`       | `T2..=T3`         | CLAIMED                       |
//! | `refund`        | `T3..=T4`         | -> FINISHED (no leak proven)  |
//! | `penalty`       | `T3..=T4`         | CLAIMED -> ABORTED (leak)     |
//! | `timer`         | `now > T4`        | ABORTED, settles the residual |

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::audit::{verify_audit_response, AuditResponse};
use crate::challenge::Challenge;
use crate::clock::LogicalClock;
use crate::encoding::{canonical_json, sha256};
use crate::error::{Error, Result};
use crate::group::{CanonicalBytes, Engine};
use crate::owner::Verdict;
use crate::params::SystemParams;

/// Index of a contract instance on the simulated chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContractId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ContractState {
    Init,
    Created,
    Accepted,
    Claimed,
    Finished,
    Aborted,
}

impl fmt::Display for ContractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("state serializes");
        f.write_str(s.as_str().expect("unit variant"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OwnerState {
    Accepted,
    /// Proved leakage; stake already returned.
    Uploaded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deadlines {
    pub t1: u64,
    pub t2: u64,
    pub t3: u64,
    pub t4: u64,
}

impl Deadlines {
    pub fn new(t1: u64, t2: u64, t3: u64, t4: u64) -> Result<Self> {
        if !(t1 < t2 && t2 < t3 && t3 < t4) {
            return Err(Error::InvalidArgument(format!(
                "deadlines must increase strictly, got {t1}, {t2}, {t3}, {t4}"
            )));
        }
        Ok(Deadlines { t1, t2, t3, t4 })
    }
}

/// Account balances plus per-contract escrow. The total is fixed once
/// genesis funding is done.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    balances: BTreeMap<String, u64>,
    escrow: BTreeMap<ContractId, u64>,
}

impl Ledger {
    /// Genesis funding; the only way currency enters the ledger.
    pub fn fund(&mut self, account: &str, amount: u64) {
        *self.balances.entry(account.to_string()).or_default() += amount;
    }

    pub fn balance(&self, account: &str) -> u64 {
        self.balances.get(account).copied().unwrap_or(0)
    }

    pub fn escrow(&self, id: ContractId) -> u64 {
        self.escrow.get(&id).copied().unwrap_or(0)
    }

    /// Sum of all balances and all escrow.
    pub fn total(&self) -> u128 {
        self.balances.values().chain(self.escrow.values()).map(|v| *v as u128).sum()
    }

    fn lock(&mut self, account: &str, id: ContractId, amount: u64) -> Result<()> {
        let available = self.balance(account);
        if available < amount {
            return Err(Error::InsufficientBalance {
                needed: amount,
                available,
            });
        }
        self.balances.insert(account.to_string(), available - amount);
        *self.escrow.entry(id).or_default() += amount;
        Ok(())
    }

    fn release(&mut self, id: ContractId, account: &str, amount: u64) {
        let held = self.escrow.entry(id).or_default();
        assert!(*held >= amount, "escrow of {id:?} cannot cover {amount}");
        *held -= amount;
        *self.balances.entry(account.to_string()).or_default() += amount;
    }

    /// Flat view with escrow under `escrow#<id>`.
    fn snapshot(&self) -> BTreeMap<String, u64> {
        let mut out = self.balances.clone();
        for (id, v) in &self.escrow {
            out.insert(format!("escrow#{}", id.0), *v);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwnerEntry {
    pub stake: u64,
    pub state: OwnerState,
}

/// Public verification material uploaded after encryption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisteredTags<E: Engine> {
    pub file_id: Vec<u8>,
    pub u: Vec<E::G1>,
    pub tags: Vec<E::G1>,
}

#[derive(Debug, Clone)]
pub struct ContractRecord<E: Engine> {
    pub state: ContractState,
    pub provider: Option<String>,
    pub file_ref: Option<String>,
    pub server_pk: Option<E::G2>,
    pub deposit: u64,
    pub deadlines: Option<Deadlines>,
    pub owners: BTreeMap<String, OwnerEntry>,
    pub accept_count: u64,
    pub registered: Option<RegisteredTags<E>>,
    pending: BTreeMap<String, Challenge<E>>,
    audits_issued: u64,
    settled: bool,
}

impl<E: Engine> ContractRecord<E> {
    fn new() -> Self {
        ContractRecord {
            state: ContractState::Init,
            provider: None,
            file_ref: None,
            server_pk: None,
            deposit: 0,
            deadlines: None,
            owners: BTreeMap::new(),
            accept_count: 0,
            registered: None,
            pending: BTreeMap::new(),
            audits_issued: 0,
            settled: false,
        }
    }

    /// Owners whose leakage audit was accepted.
    pub fn successful_auditors(&self) -> impl Iterator<Item = (&String, &OwnerEntry)> {
        self.owners.iter().filter(|(_, o)| o.state == OwnerState::Uploaded)
    }

    pub fn is_settled(&self) -> bool {
        self.settled
    }

    fn deadlines(&self) -> Deadlines {
        self.deadlines.expect("deadlines set once service ran")
    }
}

/// One line of the append-only transition log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub seq: u64,
    pub time: u64,
    pub contract: usize,
    pub op: String,
    /// Hex SHA-256 of the canonical JSON arguments.
    pub args_digest: String,
    pub state_before: ContractState,
    pub state_after: ContractState,
    /// Signed change per account; escrow appears as `escrow#<id>`.
    pub ledger_delta: BTreeMap<String, i128>,
    pub outcome: String,
}

/// A simulated chain holding any number of contract instances.
#[derive(Debug)]
pub struct Blockchain<E: Engine> {
    params: SystemParams<E>,
    clock: LogicalClock,
    ledger: Ledger,
    contracts: Vec<ContractRecord<E>>,
    log: Vec<TransitionRecord>,
}

impl<E: Engine> Blockchain<E> {
    pub fn new(params: SystemParams<E>, clock: LogicalClock) -> Self {
        Blockchain {
            params,
            clock,
            ledger: Ledger::default(),
            contracts: Vec::new(),
            log: Vec::new(),
        }
    }

    /// Independent copy with its own clock, for exploring alternatives.
    pub fn fork(&self) -> Self {
        let clock = LogicalClock::new();
        clock.advance_to(self.clock.now()).expect("fresh clock starts at zero");
        Blockchain {
            params: self.params.clone(),
            clock,
            ledger: self.ledger.clone(),
            contracts: self.contracts.clone(),
            log: self.log.clone(),
        }
    }

    pub fn params(&self) -> &SystemParams<E> {
        &self.params
    }

    pub fn clock(&self) -> &LogicalClock {
        &self.clock
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn fund(&mut self, account: &str, amount: u64) {
        self.ledger.fund(account, amount);
    }

    pub fn contract(&self, id: ContractId) -> Result<&ContractRecord<E>> {
        self.contracts.get(id.0).ok_or(Error::UnknownContract(id.0))
    }

    pub fn log(&self) -> &[TransitionRecord] {
        &self.log
    }

    /// The transition log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|r| canonical_json(r).expect("record serializes") + "\n")
            .collect()
    }

    fn record_mut(&mut self, id: ContractId) -> Result<&mut ContractRecord<E>> {
        self.contracts.get_mut(id.0).ok_or(Error::UnknownContract(id.0))
    }

    /// Run `f` and log it. `f` must check every precondition before it
    /// mutates anything, so an error leaves the chain untouched.
    fn transition<T>(
        &mut self,
        id: ContractId,
        op: &str,
        args: Value,
        f: impl FnOnce(&mut Self) -> Result<(T, String)>,
    ) -> Result<T> {
        let before_state = self.contract(id)?.state;
        let before = self.ledger.snapshot();
        let total = self.ledger.total();
        let (out, outcome) = f(self)?;
        assert_eq!(self.ledger.total(), total, "{op} broke currency conservation");
        let after = self.ledger.snapshot();
        let mut delta = BTreeMap::new();
        for k in before.keys().chain(after.keys()) {
            let d = *after.get(k).unwrap_or(&0) as i128 - *before.get(k).unwrap_or(&0) as i128;
            if d != 0 {
                delta.insert(k.clone(), d);
            }
        }
        let args_json = canonical_json(&args).expect("args serialize");
        self.log.push(TransitionRecord {
            seq: self.log.len() as u64 + 1,
            time: self.clock.now(),
            contract: id.0,
            op: op.to_string(),
            args_digest: hex::encode(sha256(&[args_json.as_bytes()])),
            state_before: before_state,
            state_after: self.contract(id)?.state,
            ledger_delta: delta,
            outcome,
        });
        Ok(out)
    }

    /// New contract instance in state INIT.
    pub fn init(&mut self) -> ContractId {
        let id = ContractId(self.contracts.len());
        self.contracts.push(ContractRecord::new());
        let digest = hex::encode(self.params.digest());
        self.transition(id, "init", json!({ "params_digest": digest }), |_| Ok(((), "ok".into())))
            .expect("init has no preconditions");
        id
    }

    /// Provider opens the service for file reference `N` and escrows its deposit.
    pub fn service(
        &mut self,
        id: ContractId,
        provider: &str,
        file_ref: &str,
        server_pk: &E::G2,
        deposit: u64,
        deadlines: Deadlines,
    ) -> Result<()> {
        let args = json!({
            "provider": provider,
            "file_ref": file_ref,
            "server_pk": hex::encode(server_pk.to_bytes()),
            "deposit": deposit,
            "deadlines": deadlines,
        });
        self.transition(id, "service", args, |chain| {
            let now = chain.clock.now();
            let c = chain.contract(id)?;
            if c.state != ContractState::Init {
                return Err(Error::WrongState(c.state.to_string()));
            }
            Deadlines::new(deadlines.t1, deadlines.t2, deadlines.t3, deadlines.t4)?;
            if now > deadlines.t1 {
                return Err(Error::DeadlinePassed);
            }
            chain.ledger.lock(provider, id, deposit)?;
            let c = chain.record_mut(id)?;
            c.provider = Some(provider.to_string());
            c.file_ref = Some(file_ref.to_string());
            c.server_pk = Some(*server_pk);
            c.deposit = deposit;
            c.deadlines = Some(deadlines);
            c.accept_count = 0;
            c.state = ContractState::Created;
            Ok(((), "ok".into()))
        })
    }

    /// Owner joins with a positive stake.
    pub fn agree(&mut self, id: ContractId, owner: &str, file_ref: &str, stake: u64) -> Result<()> {
        let args = json!({ "owner": owner, "file_ref": file_ref, "stake": stake });
        self.transition(id, "agree", args, |chain| {
            let now = chain.clock.now();
            let c = chain.contract(id)?;
            if !matches!(c.state, ContractState::Created | ContractState::Accepted) {
                return Err(Error::WrongState(c.state.to_string()));
            }
            check_file_ref(c, file_ref)?;
            let d = c.deadlines();
            if now < d.t1 || now > d.t2 {
                return Err(Error::WrongWindow);
            }
            if stake == 0 {
                return Err(Error::InvalidArgument("stake must be positive".into()));
            }
            if c.owners.contains_key(owner) {
                return Err(Error::DuplicateOwner);
            }
            chain.ledger.lock(owner, id, stake)?;
            let c = chain.record_mut(id)?;
            c.owners.insert(
                owner.to_string(),
                OwnerEntry {
                    stake,
                    state: OwnerState::Accepted,
                },
            );
            c.accept_count += 1;
            c.state = ContractState::Accepted;
            Ok(((), "ok".into()))
        })
    }

    /// Publish `(I_M, u, Sigma)` so audits can be checked on-chain. Once per contract.
    pub fn register_tags(
        &mut self,
        id: ContractId,
        file_ref: &str,
        file_id: &[u8],
        u: &[E::G1],
        tags: &[E::G1],
    ) -> Result<()> {
        let digest = |pts: &[E::G1]| {
            let bytes: Vec<u8> = pts.iter().flat_map(|p| p.to_bytes()).collect();
            hex::encode(sha256(&[&bytes]))
        };
        let args = json!({
            "file_ref": file_ref,
            "file_id": hex::encode(file_id),
            "u_digest": digest(u),
            "tags_digest": digest(tags),
        });
        self.transition(id, "register_tags", args, |chain| {
            let now = chain.clock.now();
            let c = chain.contract(id)?;
            if !matches!(
                c.state,
                ContractState::Created | ContractState::Accepted | ContractState::Claimed
            ) {
                return Err(Error::WrongState(c.state.to_string()));
            }
            check_file_ref(c, file_ref)?;
            if now > c.deadlines().t3 {
                return Err(Error::WrongWindow);
            }
            if c.registered.is_some() {
                return Err(Error::DuplicateTags);
            }
            if u.is_empty() || tags.is_empty() {
                return Err(Error::InvalidArgument("empty generators or tags".into()));
            }
            chain.record_mut(id)?.registered = Some(RegisteredTags {
                file_id: file_id.to_vec(),
                u: u.to_vec(),
                tags: tags.to_vec(),
            });
            Ok(((), "ok".into()))
        })
    }

    pub fn registered_tags(&self, id: ContractId) -> Result<&RegisteredTags<E>> {
        self.contract(id)?.registered.as_ref().ok_or(Error::TagsNotRegistered)
    }

    /// At exactly `T2`, with at least one owner and the tags registered.
    pub fn claim(&mut self, id: ContractId, file_ref: &str) -> Result<()> {
        self.transition(id, "claim", json!({ "file_ref": file_ref }), |chain| {
            let now = chain.clock.now();
            let c = chain.contract(id)?;
            if c.state != ContractState::Accepted {
                return Err(Error::WrongState(c.state.to_string()));
            }
            check_file_ref(c, file_ref)?;
            if now != c.deadlines().t2 {
                return Err(Error::WrongWindow);
            }
            if c.registered.is_none() {
                return Err(Error::TagsNotRegistered);
            }
            chain.record_mut(id)?.state = ContractState::Claimed;
            Ok(((), "ok".into()))
        })
    }

    fn audit_preconditions(&self, id: ContractId, owner: &str) -> Result<()> {
        let now = self.clock.now();
        let c = self.contract(id)?;
        if c.state != ContractState::Claimed {
            return Err(Error::WrongState(c.state.to_string()));
        }
        let d = c.deadlines();
        if now < d.t2 || now > d.t3 {
            return Err(Error::WrongWindow);
        }
        match c.owners.get(owner) {
            None => Err(Error::UnknownOwner),
            Some(o) if o.state == OwnerState::Uploaded => {
                Err(Error::WrongState("owner already proved leakage".into()))
            }
            Some(_) => Ok(()),
        }
    }

    /// The node samples a fresh audit challenge for `owner`.
    pub fn audit_challenge(&mut self, id: ContractId, owner: &str, count: usize) -> Result<Challenge<E>> {
        let args = json!({ "owner": owner, "count": count });
        self.transition(id, "audit_challenge", args, |chain| {
            chain.audit_preconditions(id, owner)?;
            let c = chain.contract(id)?;
            let reg = c.registered.as_ref().ok_or(Error::TagsNotRegistered)?;
            let mut seed = chain.params.digest().to_vec();
            seed.extend_from_slice(&(id.0 as u64).to_be_bytes());
            seed.extend_from_slice(&c.audits_issued.to_be_bytes());
            seed.extend_from_slice(owner.as_bytes());
            let challenge = Challenge::sample(reg.tags.len(), count, &seed)?;
            let c = chain.record_mut(id)?;
            c.audits_issued += 1;
            c.pending.insert(owner.to_string(), challenge.clone());
            Ok((challenge, "ok".into()))
        })
    }

    /// Check `response` against the owner's pending challenge. Accepting
    /// marks the owner as a successful auditor and returns its stake.
    pub fn audit_verify(&mut self, id: ContractId, owner: &str, response: &AuditResponse<E>) -> Result<Verdict> {
        let args = json!({
            "owner": owner,
            "response_digest": hex::encode(sha256(&[response.to_json().as_bytes()])),
        });
        self.transition(id, "audit_verify", args, |chain| {
            chain.audit_preconditions(id, owner)?;
            let c = chain.contract(id)?;
            let challenge = c
                .pending
                .get(owner)
                .ok_or_else(|| Error::WrongState("no pending audit challenge".into()))?;
            let reg = c.registered.as_ref().ok_or(Error::TagsNotRegistered)?;
            let pk = c.server_pk.expect("set by service");
            let verdict = verify_audit_response(&chain.params, &reg.file_id, &reg.u, &pk, challenge, response);
            let c = chain.record_mut(id)?;
            c.pending.remove(owner);
            if verdict.is_accept() {
                let entry = c.owners.get_mut(owner).expect("checked above");
                entry.state = OwnerState::Uploaded;
                let stake = entry.stake;
                chain.ledger.release(id, owner, stake);
            }
            let outcome = match &verdict {
                Verdict::Accept => "accept".to_string(),
                Verdict::Reject(why) => format!("reject: {why}"),
            };
            Ok((verdict, outcome))
        })
    }

    fn settlement_window(&self, id: ContractId) -> Result<&ContractRecord<E>> {
        let now = self.clock.now();
        let c = self.contract(id)?;
        let Some(d) = c.deadlines else {
            return Err(Error::WrongState(c.state.to_string()));
        };
        if now < d.t3 || now > d.t4 {
            return Err(Error::WrongWindow);
        }
        Ok(c)
    }

    /// No leakage proven: deposit back to the provider, stakes back to the
    /// owners.
    pub fn refund(&mut self, id: ContractId) -> Result<()> {
        self.transition(id, "refund", json!({}), |chain| {
            let c = chain.settlement_window(id)?;
            if !matches!(
                c.state,
                ContractState::Created | ContractState::Accepted | ContractState::Claimed
            ) {
                return Err(Error::WrongState(c.state.to_string()));
            }
            if c.successful_auditors().next().is_some() {
                return Err(Error::WrongState("leakage was proven".into()));
            }
            let provider = c.provider.clone().expect("set by service");
            let payouts: Vec<(String, u64)> =
                c.owners.iter().map(|(k, o)| (k.clone(), o.stake)).collect();
            let deposit = c.deposit;
            chain.ledger.release(id, &provider, deposit);
            for (owner, stake) in payouts {
                chain.ledger.release(id, &owner, stake);
            }
            let c = chain.record_mut(id)?;
            c.state = ContractState::Finished;
            c.settled = true;
            Ok(((), "ok".into()))
        })
    }

    /// Leakage proven: each successful auditor receives
    /// `floor(deposit * R_i / sum of all stakes)`, other owners get their
    /// stakes back and the rest of the deposit waits for [`Self::timer`].
    pub fn penalty(&mut self, id: ContractId) -> Result<BTreeMap<String, u64>> {
        self.transition(id, "penalty", json!({}), |chain| {
            let c = chain.settlement_window(id)?;
            if c.state != ContractState::Claimed {
                return Err(Error::WrongState(c.state.to_string()));
            }
            if c.successful_auditors().next().is_none() {
                return Err(Error::WrongState("no leakage proven".into()));
            }
            let shares = penalty_shares(c.deposit, &c.owners);
            let refunds: Vec<(String, u64)> = c
                .owners
                .iter()
                .filter(|(_, o)| o.state == OwnerState::Accepted)
                .map(|(k, o)| (k.clone(), o.stake))
                .collect();
            for (owner, amount) in &shares {
                chain.ledger.release(id, owner, *amount);
            }
            for (owner, stake) in refunds {
                chain.ledger.release(id, &owner, stake);
            }
            chain.record_mut(id)?.state = ContractState::Aborted;
            Ok((shares, "ok".into()))
        })
    }

    /// After `T4`, return what is left of an aborted contract's escrow to
    /// the provider.
    pub fn timer(&mut self, id: ContractId) -> Result<u64> {
        self.transition(id, "timer", json!({}), |chain| {
            let now = chain.clock.now();
            let c = chain.contract(id)?;
            if c.state != ContractState::Aborted || c.settled {
                return Err(Error::WrongState(c.state.to_string()));
            }
            if now <= c.deadlines().t4 {
                return Err(Error::WrongWindow);
            }
            let provider = c.provider.clone().expect("set by service");
            let residual = chain.ledger.escrow(id);
            chain.ledger.release(id, &provider, residual);
            chain.record_mut(id)?.settled = true;
            Ok((residual, "ok".into()))
        })
    }
}

fn check_file_ref<E: Engine>(c: &ContractRecord<E>, file_ref: &str) -> Result<()> {
    if c.file_ref.as_deref() != Some(file_ref) {
        return Err(Error::InvalidArgument(format!("contract is not for file {file_ref:?}")));
    }
    Ok(())
}

/// Pro-rata shares of `deposit` for successful auditors, weighted by stake
/// over the stakes of all agreed owners.
pub fn penalty_shares(deposit: u64, owners: &BTreeMap<String, OwnerEntry>) -> BTreeMap<String, u64> {
    let total: u128 = owners.values().map(|o| o.stake as u128).sum();
    owners
        .iter()
        .filter(|(_, o)| o.state == OwnerState::Uploaded)
        .map(|(k, o)| {
            let share = deposit as u128 * o.stake as u128 / total;
            (k.clone(), share as u64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupElem, ToyGroup};

    type Chain = Blockchain<ToyGroup>;

    const D: Deadlines = Deadlines {
        t1: 10,
        t2: 20,
        t3: 30,
        t4: 40,
    };

    fn chain() -> Chain {
        let mut c = Blockchain::new(SystemParams::new(16).unwrap(), LogicalClock::new());
        c.fund("provider", 1000);
        c.fund("alice", 100);
        c.fund("bob", 100);
        c
    }

    fn pk() -> <ToyGroup as Engine>::G2 {
        ToyGroup::g2().mul_u64(77)
    }

    fn tags() -> (Vec<<ToyGroup as Engine>::G1>, Vec<<ToyGroup as Engine>::G1>) {
        (vec![ToyGroup::g1(); 2], vec![ToyGroup::g1().mul_u64(3); 5])
    }

    /// Serviced, two owners agreed, tags registered, claimed at T2.
    fn claimed() -> (Chain, ContractId) {
        let mut c = chain();
        let id = c.init();
        c.service(id, "provider", "N", &pk(), 600, D).unwrap();
        c.clock().advance_to(D.t1).unwrap();
        c.agree(id, "alice", "N", 30).unwrap();
        c.agree(id, "bob", "N", 10).unwrap();
        let (u, s) = tags();
        c.register_tags(id, "N", b"file", &u, &s).unwrap();
        c.clock().advance_to(D.t2).unwrap();
        c.claim(id, "N").unwrap();
        (c, id)
    }

    #[test]
    fn init_gives_independent_contracts() {
        let mut c = chain();
        let a = c.init();
        let b = c.init();
        assert_ne!(a, b);
        assert_eq!(c.contract(a).unwrap().state, ContractState::Init);
        assert!(c.contract(b).unwrap().owners.is_empty());
        let expected = hex::encode(sha256(&[
            canonical_json(&json!({"params_digest": hex::encode(c.params().digest())}))
                .unwrap()
                .as_bytes(),
        ]));
        assert_eq!(c.log()[0].args_digest, expected);
    }

    #[test]
    fn service_escrows_whole_balance() {
        let mut c = chain();
        let id = c.init();
        c.service(id, "provider", "N", &pk(), 1000, D).unwrap();
        assert_eq!(c.ledger().balance("provider"), 0);
        assert_eq!(c.ledger().escrow(id), 1000);
        assert_eq!(c.ledger().total(), 1200);
    }

    #[test]
    fn service_rejections_leave_no_trace() {
        let mut c = chain();
        let id = c.init();
        let log_len = c.log().len();
        assert_eq!(
            c.service(id, "provider", "N", &pk(), 1001, D).unwrap_err(),
            Error::InsufficientBalance {
                needed: 1001,
                available: 1000
            }
        );
        let bad = Deadlines { t3: 20, ..D };
        assert!(matches!(c.service(id, "provider", "N", &pk(), 1, bad), Err(Error::InvalidArgument(_))));
        c.clock().advance_to(D.t1 + 1).unwrap();
        assert_eq!(c.service(id, "provider", "N", &pk(), 1, D).unwrap_err(), Error::DeadlinePassed);
        assert_eq!(c.contract(id).unwrap().state, ContractState::Init);
        assert_eq!(c.ledger().balance("provider"), 1000);
        assert_eq!(c.log().len(), log_len);
    }

    #[test]
    fn agree_checks() {
        let mut c = chain();
        let id = c.init();
        c.service(id, "provider", "N", &pk(), 100, D).unwrap();
        assert_eq!(c.agree(id, "alice", "N", 5).unwrap_err(), Error::WrongWindow);
        c.clock().advance_to(D.t1).unwrap();
        assert!(matches!(c.agree(id, "alice", "N", 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(c.agree(id, "alice", "M", 5), Err(Error::InvalidArgument(_))));
        c.agree(id, "alice", "N", 5).unwrap();
        assert_eq!(c.contract(id).unwrap().accept_count, 1);
        assert_eq!(c.agree(id, "alice", "N", 5).unwrap_err(), Error::DuplicateOwner);
        assert!(matches!(c.agree(id, "bob", "N", 101), Err(Error::InsufficientBalance { .. })));
        c.clock().advance_to(D.t2 + 1).unwrap();
        assert_eq!(c.agree(id, "bob", "N", 5).unwrap_err(), Error::WrongWindow);
    }

    #[test]
    fn claim_only_at_t2_with_tags() {
        let mut c = chain();
        let id = c.init();
        c.service(id, "provider", "N", &pk(), 100, D).unwrap();
        c.clock().advance_to(D.t1).unwrap();
        c.agree(id, "alice", "N", 5).unwrap();
        assert_eq!(c.claim(id, "N").unwrap_err(), Error::WrongWindow);
        c.clock().advance_to(D.t2).unwrap();
        assert_eq!(c.claim(id, "N").unwrap_err(), Error::TagsNotRegistered);
        let (u, s) = tags();
        c.register_tags(id, "N", b"file", &u, &s).unwrap();
        assert_eq!(c.register_tags(id, "N", b"file", &u, &s).unwrap_err(), Error::DuplicateTags);
        let reg = c.registered_tags(id).unwrap();
        assert_eq!((reg.u.clone(), reg.tags.clone()), (u, s));

        let mut late = c.fork();
        late.clock().advance_to(D.t2 + 1).unwrap();
        assert_eq!(late.claim(id, "N").unwrap_err(), Error::WrongWindow);
        c.claim(id, "N").unwrap();
        assert_eq!(c.contract(id).unwrap().state, ContractState::Claimed);
    }

    #[test]
    fn refund_restores_every_balance() {
        let (mut c, id) = claimed();
        assert_eq!(c.refund(id).unwrap_err(), Error::WrongWindow);
        c.clock().advance_to(D.t3).unwrap();
        c.refund(id).unwrap();
        assert_eq!(c.ledger().balance("provider"), 1000);
        assert_eq!(c.ledger().balance("alice"), 100);
        assert_eq!(c.ledger().balance("bob"), 100);
        assert_eq!(c.ledger().escrow(id), 0);
        assert_eq!(c.contract(id).unwrap().state, ContractState::Finished);
        assert!(matches!(c.penalty(id), Err(Error::WrongState(_))));
        assert!(matches!(c.refund(id), Err(Error::WrongState(_))));
    }

    #[test]
    fn penalty_without_leak_is_refused() {
        let (mut c, id) = claimed();
        c.clock().advance_to(D.t3).unwrap();
        assert!(matches!(c.penalty(id), Err(Error::WrongState(_))));
    }

    #[test]
    fn penalty_shares_and_timer() {
        let (mut c, id) = claimed();
        // Mark alice as a successful auditor directly; audit crypto is
        // covered in the integration tests.
        let rec = &mut c.contracts[id.0];
        rec.owners.get_mut("alice").unwrap().state = OwnerState::Uploaded;
        c.ledger.release(id, "alice", 30);

        assert_eq!(c.timer(id).unwrap_err(), Error::WrongState("CLAIMED".into()));
        c.clock().advance_to(D.t3).unwrap();
        assert!(matches!(c.refund(id), Err(Error::WrongState(_))));
        let shares = c.penalty(id).unwrap();
        // 600 * 30 / 40
        assert_eq!(shares["alice"], 450);
        assert_eq!(c.ledger().balance("alice"), 100 + 450);
        assert_eq!(c.ledger().balance("bob"), 100);
        assert_eq!(c.ledger().escrow(id), 150);
        assert_eq!(c.contract(id).unwrap().state, ContractState::Aborted);

        assert_eq!(c.timer(id).unwrap_err(), Error::WrongWindow);
        c.clock().advance_to(D.t4 + 1).unwrap();
        assert_eq!(c.timer(id).unwrap(), 150);
        assert_eq!(c.ledger().balance("provider"), 400 + 150);
        assert_eq!(c.ledger().escrow(id), 0);
        assert!(matches!(c.timer(id), Err(Error::WrongState(_))));
        assert_eq!(c.ledger().total(), 1200);
    }

    #[test]
    fn audit_preconditions() {
        let (mut c, id) = claimed();
        assert_eq!(c.audit_challenge(id, "carol", 2).unwrap_err(), Error::UnknownOwner);
        let ch = c.audit_challenge(id, "alice", 2).unwrap();
        assert_eq!(ch.len(), 2);
        assert_ne!(c.audit_challenge(id, "alice", 2).unwrap(), ch);
        c.clock().advance_to(D.t3 + 1).unwrap();
        assert_eq!(c.audit_challenge(id, "alice", 2).unwrap_err(), Error::WrongWindow);
    }

    #[test]
    fn transition_log_is_jsonl() {
        let (c, _) = claimed();
        let text = c.log_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), c.log().len());
        let first: TransitionRecord = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(first.op, "service");
        assert_eq!(first.ledger_delta["provider"], -600);
        assert_eq!(first.ledger_delta["escrow#0"], 600);
        assert_eq!(first.state_after, ContractState::Created);
        assert!(c.log().windows(2).all(|w| w[1].seq == w[0].seq + 1));
    }

    #[test]
    fn shares_never_exceed_deposit() {
        let mut owners = BTreeMap::new();
        for (k, stake) in [("a", 7u64), ("b", 13), ("c", 1)] {
            owners.insert(k.to_string(), OwnerEntry { stake, state: OwnerState::Uploaded });
        }
        let shares = penalty_shares(1000, &owners);
        assert_eq!(shares["a"], 333);
        assert_eq!(shares["b"], 619);
        assert_eq!(shares["c"], 47);
        assert!(shares.values().sum::<u64>() <= 1000);
    }
}
