// SPDX-License-Identifier: Apache-2.0

//! One simulated deployment: an owner, a cloud server with its enclaves and
//! a chain holding one contract, all driven by a single seeded RNG.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use sevdel_core::group::CanonicalBytes;
use sevdel_core::{
    audit_respond, gen_challenge, join, outsource, split, verify_encryption_proof, AuditResponse, BlockMatrix,
    Blockchain, Challenge, CiphertextMatrix, CloudServer, ContractId, DeletionReceipt, EncProof, EncTagSet,
    EnclaveHandle, EnclaveRegistry, Engine, FileManifest, GroupElem, LeakedBlocks, LogicalClock, OwnerKeyPair,
    SectorGenerators, ServerKeyPair, SystemParams, TagSet, ToyGroup, Verdict,
};

use crate::error::{CliError, Context, Result};
use crate::scenario::{Action, Check, ContractSetup, Expectations, Expected, Fault, Outcome, Settlement};
use crate::transcript::{artifact, to_value, Transcript};

pub const PROVIDER: &str = "provider";
const FILE_NAME: &str = "file.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    pub seed: u64,
    pub file_size: usize,
    pub s: usize,
    pub sector_bits: u32,
    pub challenge_count: usize,
}

impl SessionConfig {
    /// Number of blocks the file splits into.
    pub fn blocks(&self) -> Result<usize> {
        SystemParams::<ToyGroup>::new(self.sector_bits)
            .map_err(|e| CliError::ScenarioInvalid(e.to_string()))?;
        if self.s == 0 {
            return Err(CliError::ScenarioInvalid("s must be positive".into()));
        }
        Ok(self.file_size.div_ceil(self.s * self.sector_bits as usize / 8))
    }
}

/// Owner-side view of the outsourced file.
struct Outsourced<E: Engine> {
    manifest: FileManifest,
    blocks: BlockMatrix,
    gens: SectorGenerators<E>,
    tags: TagSet<E>,
}

/// What the server holds after encryption.
struct Stored<E: Engine> {
    handle: EnclaveHandle,
    blocks: BlockMatrix,
    ct: CiphertextMatrix<E>,
    sigma: EncTagSet<E>,
}

struct Results<E: Engine> {
    verify: Option<Verdict>,
    challenge: Option<Challenge<E>>,
    proof: Option<EncProof<E>>,
    round_trip: Option<bool>,
    receipt: Option<DeletionReceipt>,
    probes: Vec<String>,
    audit: Option<Expected>,
    audit_response: Option<AuditResponse<E>>,
    settlement: Option<Settlement>,
}

pub struct Session<E: Engine> {
    cfg: SessionConfig,
    setup: ContractSetup,
    faults: Vec<Fault>,
    rng: ChaCha20Rng,
    clock: LogicalClock,
    cloud: CloudServer<E>,
    chain: Blockchain<E>,
    contract: ContractId,
    synced: usize,
    owner_keys: OwnerKeyPair<E>,
    data: Vec<u8>,
    file: Option<Outsourced<E>>,
    stored: Option<Stored<E>>,
    leaked: Option<LeakedBlocks<E>>,
    results: Results<E>,
    transcript: Transcript,
}

impl<E: Engine> Session<E> {
    pub fn new(cfg: SessionConfig, setup: ContractSetup, faults: Vec<Fault>) -> Result<Self> {
        cfg.blocks()?;
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let mut data_rng = rng.clone();
        data_rng.set_stream(1);
        let mut data = vec![0u8; cfg.file_size];
        data_rng.fill_bytes(&mut data);

        let clock = LogicalClock::new();
        let params = SystemParams::<E>::new(cfg.sector_bits).context(|| "system parameters".into())?;
        let cloud = CloudServer::new(
            params.clone(),
            ServerKeyPair::generate(&mut rng),
            Arc::new(EnclaveRegistry::new(clock.clone())),
        );
        let owner_keys = OwnerKeyPair::generate(&mut rng);
        let mut chain = Blockchain::new(params, clock.clone());
        chain.fund(PROVIDER, setup.provider_balance);
        for o in &setup.owners {
            chain.fund(&o.name, o.balance);
        }
        let contract = chain.init();
        Ok(Session {
            cfg,
            setup,
            faults,
            rng,
            clock,
            cloud,
            chain,
            contract,
            synced: 0,
            owner_keys,
            data,
            file: None,
            stored: None,
            leaked: None,
            results: Results {
                verify: None,
                challenge: None,
                proof: None,
                round_trip: None,
                receipt: None,
                probes: Vec::new(),
                audit: None,
                audit_response: None,
                settlement: None,
            },
            transcript: Transcript::new(),
        })
    }

    /// Replace the generated file content. Must run before `outsource`.
    pub fn set_data(&mut self, data: Vec<u8>) {
        self.data = data;
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn chain(&self) -> &Blockchain<E> {
        &self.chain
    }

    fn owner(&self) -> &str {
        &self.setup.owners[0].name
    }

    fn file_ref(&self) -> String {
        format!("contract#{}", self.contract.0)
    }

    fn has(&self, fault: impl Fn(&Fault) -> bool) -> bool {
        self.faults.iter().any(fault)
    }

    fn emit(&mut self, actor: &str, event: &str, data: Value) {
        let t = self.clock.now();
        self.transcript.push(t, actor, event, data);
    }

    /// Copy new contract log records into the transcript.
    fn sync_chain(&mut self) {
        let records: Vec<Value> = self.chain.log()[self.synced..].iter().map(to_value).collect();
        self.synced += records.len();
        for r in records {
            self.emit("chain", "transition", r);
        }
    }

    pub fn begin(&mut self, name: &str) {
        let balances = self.balances();
        let data = json!({
            "name": name,
            "group": E::GROUP_ID,
            "seed": self.cfg.seed,
            "file_size": self.data.len(),
            "s": self.cfg.s,
            "sector_bits": self.cfg.sector_bits,
            "challenge_count": self.cfg.challenge_count,
            "faults": to_value(&self.faults),
            "params_digest": hex::encode(self.cloud.params().digest()),
            "server_pk": hex::encode(self.cloud.public_key().to_bytes()),
            "owner_pk": hex::encode(self.owner_keys.public().to_bytes()),
            "balances": balances,
        });
        self.emit("harness", "setup", data);
    }

    pub fn step(&mut self, t: u64, action: Action) -> Result<()> {
        self.clock
            .advance_to(t)
            .context(|| format!("advance clock for {}", action.name()))?;
        self.run(action)
            .map_err(|e| prefix(e, &format!("t={t} {}", action.name())))?;
        self.sync_chain();
        Ok(())
    }

    fn run(&mut self, action: Action) -> Result<()> {
        let id = self.contract;
        let file_ref = self.file_ref();
        match action {
            Action::Service => {
                let d = self.setup.deadlines;
                let pk = *self.cloud.public_key();
                self.chain
                    .service(id, PROVIDER, &file_ref, &pk, self.setup.deposit, d)
                    .context(|| "service".into())?;
            }
            Action::Agree => {
                for o in self.setup.owners.clone() {
                    self.chain.agree(id, &o.name, &file_ref, o.stake).context(|| format!("agree {}", o.name))?;
                }
            }
            Action::Outsource => self.outsource()?,
            Action::Encrypt => self.encrypt()?,
            Action::Register => {
                let file = need(&self.file, "file not outsourced yet")?;
                let (file_id, u) = (file.manifest.file_id.clone(), file.gens.public().to_vec());
                let sigma = need(&self.stored, "file not encrypted yet")?.sigma.tags.clone();
                self.chain
                    .register_tags(id, &file_ref, &file_id, &u, &sigma)
                    .context(|| "register tags".into())?;
            }
            Action::Verify => self.verify()?,
            Action::Decrypt => self.decrypt()?,
            Action::Claim => self.chain.claim(id, &file_ref).context(|| "claim".into())?,
            Action::Delete => self.delete()?,
            Action::Audit => self.audit()?,
            Action::Refund => {
                self.chain.refund(id).context(|| "refund".into())?;
                self.results.settlement = Some(Settlement::Refund);
            }
            Action::Penalty => {
                let shares = self.chain.penalty(id).context(|| "penalty".into())?;
                self.results.settlement = Some(Settlement::Penalty);
                self.emit("chain", "penalty", json!({ "shares": shares }));
            }
            Action::Timer => {
                let released = self.chain.timer(id).context(|| "timer".into())?;
                self.emit("chain", "timer", json!({ "released": released }));
            }
        }
        Ok(())
    }

    fn outsource(&mut self) -> Result<()> {
        let owner = self.owner().to_string();
        let (manifest, blocks) =
            split(&owner, FILE_NAME, &self.data, self.cfg.s, self.cfg.sector_bits).context(|| "split".into())?;
        let (gens, tags) = outsource(self.cloud.params(), &self.owner_keys, &manifest, &blocks, &mut self.rng)
            .context(|| "outsource".into())?;
        let data = json!({
            "manifest": to_value(&manifest),
            "sector_generators": gens.public().iter().map(|u| hex::encode(u.to_bytes())).collect::<Vec<_>>(),
            "tags": artifact(&tags.to_packed()),
            "blocks": artifact(&blocks.to_packed(self.cfg.sector_bits)),
        });
        self.emit(&owner, "outsource", data);
        self.file = Some(Outsourced {
            manifest,
            blocks,
            gens,
            tags,
        });
        Ok(())
    }

    fn encrypt(&mut self) -> Result<()> {
        let file = need(&self.file, "file not outsourced yet")?;
        let manifest = file.manifest.clone();
        let u = file.gens.public().to_vec();
        let mut blocks = file.blocks.clone();
        for f in &self.faults {
            if let Fault::TamperBlock { block } = f {
                let i = *block as usize - 1;
                blocks.set(i, 0, blocks.get(i, 0) ^ 1);
            }
        }
        let handle = self.cloud.receive_file(&manifest).context(|| "receive file".into())?;
        let mut ct = self
            .cloud
            .encrypt_file(&handle, &manifest, &blocks, &mut self.rng)
            .context(|| "encrypt".into())?;
        for f in &self.faults {
            if let Fault::SkipEncryption { block } = f {
                let i = *block as usize - 1;
                for j in 0..manifest.s {
                    ct.set(i, j, (E::g1().mul_u64(blocks.get(i, j)), E::G1::identity()));
                }
            }
        }
        let sigma = self.cloud.gen_enc_tags(&manifest, &ct, &u).context(|| "encrypted tags".into())?;
        self.emit(
            "cloud",
            "encrypt",
            json!({
                "enclave": handle.id().0,
                "key": hex::encode(ct.key().to_bytes()),
                "ciphertext": artifact(&ct.to_packed()),
                "enc_tags": artifact(&sigma.to_packed()),
            }),
        );
        if self.has(|f| matches!(f, Fault::LeakCiphertexts)) {
            let leaked = LeakedBlocks::all_of(&ct);
            self.emit("cloud", "leak", json!({ "blocks": leaked.len() }));
            self.leaked = Some(leaked);
        }
        self.stored = Some(Stored {
            handle,
            blocks,
            ct,
            sigma,
        });
        Ok(())
    }

    fn verify(&mut self) -> Result<()> {
        let owner = self.owner().to_string();
        let seed = self.rng.next_u64();
        let file = need(&self.file, "file not outsourced yet")?;
        let ch = gen_challenge(&file.manifest, self.cfg.challenge_count, seed).context(|| "challenge".into())?;
        let st = need(&self.stored, "file not encrypted yet")?;
        let proof = self
            .cloud
            .prove_encryption(&st.handle, &file.manifest, &st.blocks, &st.ct, &file.tags, &ch, &mut self.rng)
            .context(|| "prove encryption".into())?;
        let verdict = verify_encryption_proof(
            self.cloud.params(),
            &file.manifest,
            file.gens.public(),
            self.owner_keys.public(),
            st.ct.key(),
            &ch,
            &proof,
        )
        .context(|| "verify encryption".into())?;
        let size = proof.encoded_len();
        self.emit(&owner, "challenge", to_value(&ch));
        self.emit("cloud", "proof", json!({ "proof": to_value(&proof), "encoded_len": size }));
        self.emit(&owner, "verdict", to_value(&verdict));
        self.results.verify = Some(verdict);
        self.results.challenge = Some(ch);
        self.results.proof = Some(proof);
        Ok(())
    }

    fn decrypt(&mut self) -> Result<()> {
        let file = need(&self.file, "file not outsourced yet")?;
        let st = need(&self.stored, "file not encrypted yet")?;
        let blocks = self
            .cloud
            .decrypt_file(&st.handle, &file.manifest, &st.ct)
            .context(|| "decrypt".into())?;
        let bytes = join(&file.manifest, &blocks).context(|| "join".into())?;
        let ok = bytes == self.data;
        self.emit("cloud", "decrypt", json!({ "plaintext": artifact(&bytes), "round_trip": ok }));
        self.results.round_trip = Some(ok);
        Ok(())
    }

    fn delete(&mut self) -> Result<()> {
        let file_id = need(&self.file, "file not outsourced yet")?.manifest.file_id.clone();
        let receipt = self.cloud.delete_file(&file_id).context(|| "delete".into())?;
        self.emit("cloud", "delete", to_value(&receipt));
        self.results.receipt = Some(receipt);
        if self.has(|f| matches!(f, Fault::DoubleDelete)) {
            let code = match self.cloud.delete_file(&file_id) {
                Ok(_) => "ok",
                Err(e) => e.code(),
            };
            self.emit("cloud", "delete-again", json!({ "result": code }));
        }

        let file = need(&self.file, "file not outsourced yet")?;
        let st = need(&self.stored, "file not encrypted yet")?;
        let decrypt = code_of(self.cloud.decrypt_block(&st.handle, &st.ct.get(0, 0)));
        let ch = Challenge::sample(file.manifest.n, 1, &file_id).context(|| "probe challenge".into())?;
        let prove = code_of(self.cloud.prove_encryption(
            &st.handle,
            &file.manifest,
            &st.blocks,
            &st.ct,
            &file.tags,
            &ch,
            &mut self.rng,
        ));
        self.emit("cloud", "post-delete-probe", json!({ "decrypt_block": decrypt, "prove_encryption": prove }));
        self.results.probes.push(decrypt);
        self.results.probes.push(prove);
        Ok(())
    }

    fn audit(&mut self) -> Result<()> {
        let owner = self.owner().to_string();
        let id = self.contract;
        let ch = self
            .chain
            .audit_challenge(id, &owner, self.cfg.challenge_count)
            .context(|| "audit challenge".into())?;
        self.sync_chain();
        self.emit("chain", "audit-challenge", to_value(&ch));
        let manifest = &need(&self.file, "file not outsourced yet")?.manifest;
        let sigma = EncTagSet {
            tags: self.chain.registered_tags(id).context(|| "registered tags".into())?.tags.clone(),
        };
        let leaked = self.leaked.clone().unwrap_or_default();
        match audit_respond(manifest, &leaked, &sigma, &ch) {
            Err(e) => {
                self.emit(&owner, "audit-response", json!({ "error": e.code() }));
                self.results.audit = Some(Expected::Unavailable);
            }
            Ok(resp) => {
                self.emit(&owner, "audit-response", to_value(&resp));
                let verdict = self.chain.audit_verify(id, &owner, &resp).context(|| "audit verify".into())?;
                self.emit("chain", "audit-verdict", to_value(&verdict));
                self.results.audit = Some(if verdict.is_accept() {
                    Expected::Accept
                } else {
                    Expected::Reject
                });
                self.results.audit_response = Some(resp);
            }
        }
        Ok(())
    }

    pub fn balances(&self) -> BTreeMap<String, u64> {
        std::iter::once(PROVIDER)
            .chain(self.setup.owners.iter().map(|o| o.name.as_str()))
            .map(|a| (a.to_string(), self.chain.ledger().balance(a)))
            .collect()
    }

    /// Compare against the expectations and close the transcript.
    pub fn finish(mut self, expect: &Expectations) -> Outcome {
        let mut checks = Vec::new();
        let mut check = |name: &str, expected: String, actual: String| {
            checks.push(Check {
                name: name.into(),
                ok: expected == actual,
                expected,
                actual,
            })
        };
        let show = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        let name = |v: Value| v.as_str().unwrap_or_default().to_string();
        if let Some(e) = expect.verify {
            let actual = self.results.verify.as_ref().map(|v| {
                if v.is_accept() {
                    Expected::Accept
                } else {
                    Expected::Reject
                }
            });
            check("verify", name(to_value(&e)), show(actual.map(|a| name(to_value(&a)))));
        }
        if let Some(e) = expect.audit {
            check("audit", name(to_value(&e)), show(self.results.audit.map(|a| name(to_value(&a)))));
        }
        if let Some(e) = expect.settlement {
            check(
                "settlement",
                name(to_value(&e)),
                show(self.results.settlement.map(|a| name(to_value(&a)))),
            );
        }
        if let Some(e) = expect.round_trip {
            check("round_trip", e.to_string(), show(self.results.round_trip.map(|r| r.to_string())));
        }
        if let Some(e) = &expect.post_delete {
            let actual = if self.results.probes.is_empty() {
                "none".to_string()
            } else if self.results.probes.iter().all(|p| p == e) {
                e.clone()
            } else {
                self.results.probes.join(",")
            };
            check("post_delete", e.clone(), actual);
        }
        let balances = self.balances();
        for (acct, want) in &expect.balances {
            let got = balances.get(acct).copied().unwrap_or(0);
            check(&format!("balance:{acct}"), want.to_string(), got.to_string());
        }
        let passed = checks.iter().all(|c| c.ok);
        self.emit(
            "harness",
            "result",
            json!({ "checks": to_value(&checks), "balances": balances, "passed": passed }),
        );
        Outcome {
            transcript: self.transcript,
            checks,
            balances,
        }
    }

    /// Write every artifact produced so far into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<String>> {
        fs::create_dir_all(dir).context(|| format!("create {}", dir.display()))?;
        let mut files: Vec<(&str, Vec<u8>)> = vec![
            ("params.json", self.cloud.params().to_json().into_bytes()),
            ("server_pk.hex", hex::encode(self.cloud.public_key().to_bytes()).into_bytes()),
            ("owner_pk.hex", hex::encode(self.owner_keys.public().to_bytes()).into_bytes()),
            ("contract_log.jsonl", self.chain.log_jsonl().into_bytes()),
        ];
        if let Some(f) = &self.file {
            files.push(("manifest.json", f.manifest.to_json().into_bytes()));
            files.push(("tags.bin", f.tags.to_packed()));
            let u: Vec<String> = f.gens.public().iter().map(|u| hex::encode(u.to_bytes())).collect();
            files.push(("sector_generators.json", json!(u).to_string().into_bytes()));
        }
        if let Some(st) = &self.stored {
            files.push(("ciphertext.bin", st.ct.to_packed()));
            files.push(("enc_tags.bin", st.sigma.to_packed()));
        }
        let r = &self.results;
        if let (Some(ch), Some(p), Some(v)) = (&r.challenge, &r.proof, &r.verify) {
            files.push(("challenge.json", ch.to_json().into_bytes()));
            files.push(("proof.json", p.to_json().into_bytes()));
            files.push(("verdict.json", to_value(v).to_string().into_bytes()));
        }
        if let Some(rc) = &r.receipt {
            files.push(("receipt.json", to_value(rc).to_string().into_bytes()));
        }
        if let Some(resp) = &r.audit_response {
            files.push(("audit_response.json", resp.to_json().into_bytes()));
        }
        let mut written = Vec::new();
        for (name, bytes) in files {
            let path = dir.join(name);
            fs::write(&path, bytes).context(|| format!("write {}", path.display()))?;
            written.push(name.to_string());
        }
        Ok(written)
    }
}

fn need<'a, T>(slot: &'a Option<T>, what: &str) -> Result<&'a T> {
    slot.as_ref().ok_or_else(|| CliError::ScenarioInvalid(what.into()))
}

fn code_of<T>(r: sevdel_core::Result<T>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => e.code().into(),
    }
}

fn prefix(e: CliError, step: &str) -> CliError {
    match e {
        CliError::Protocol { context, source } => CliError::Protocol {
            context: format!("{step}: {context}"),
            source,
        },
        CliError::ScenarioInvalid(m) => CliError::ScenarioInvalid(format!("{step}: {m}")),
        other => other,
    }
}
