// SPDX-License-Identifier: Apache-2.0

//! Software model of a per-file SGX enclave.
//!
//! The simulator enforces the API contract only: once an enclave is
//! destroyed no call can read its secrets, and its buffers are overwritten
//! before they are released. A host that bypasses this API (reads process
//! memory, snapshots the heap) is outside the model; this mirrors trusting a
//! rational provider to run genuine enclave hardware.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use zeroize::{Zeroize, Zeroizing};

use crate::clock::LogicalClock;
use crate::encoding::hex_bytes;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EnclaveId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnclaveState {
    Alive,
    Destroyed,
}

/// Record of an enclave teardown, kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionReceipt {
    #[serde(with = "hex_bytes")]
    pub file_id: Vec<u8>,
    pub enclave_id: EnclaveId,
    pub destroyed_at: u64,
    /// Bytes overwritten with zeros, checked before release.
    pub zeroized_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnclaveStatus {
    pub enclave_id: EnclaveId,
    pub state: EnclaveState,
    pub destroyed_at: Option<u64>,
}

struct Enclave {
    state: EnclaveState,
    secrets: BTreeMap<String, Vec<u8>>,
    destroyed_at: Option<u64>,
}

impl Enclave {
    fn alive(&self) -> Result<()> {
        match self.state {
            EnclaveState::Alive => Ok(()),
            EnclaveState::Destroyed => Err(Error::EnclaveDestroyed),
        }
    }

    /// Overwrite every secret buffer, assert the overwrite took, then drop.
    fn wipe(&mut self) -> usize {
        let mut wiped = 0;
        for buf in self.secrets.values_mut() {
            buf.as_mut_slice().zeroize();
            assert!(
                buf.iter().all(|b| *b == 0),
                "enclave secret survived zeroization"
            );
            wiped += buf.len();
        }
        self.secrets.clear();
        wiped
    }
}

/// Capability for one enclave. Operations through a handle are serialized.
#[derive(Clone)]
pub struct EnclaveHandle {
    id: EnclaveId,
    file_id: Vec<u8>,
    inner: Arc<Mutex<Enclave>>,
}

impl std::fmt::Debug for EnclaveHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnclaveHandle")
            .field("id", &self.id)
            .field("file_id", &hex::encode(&self.file_id))
            .field("state", &self.state())
            .finish()
    }
}

impl EnclaveHandle {
    pub fn id(&self) -> EnclaveId {
        self.id
    }

    pub fn file_id(&self) -> &[u8] {
        &self.file_id
    }

    pub fn state(&self) -> EnclaveState {
        self.inner.lock().state
    }

    pub fn is_alive(&self) -> bool {
        self.state() == EnclaveState::Alive
    }

    /// Store `secret` under `key`, replacing (and wiping) any previous value.
    pub fn seal(&self, key: &str, secret: &[u8]) -> Result<()> {
        let mut e = self.inner.lock();
        e.alive()?;
        if let Some(mut old) = e.secrets.insert(key.to_string(), secret.to_vec()) {
            old.zeroize();
        }
        Ok(())
    }

    /// Copy a secret out. The copy wipes itself on drop.
    pub fn unseal(&self, key: &str) -> Result<Zeroizing<Vec<u8>>> {
        let e = self.inner.lock();
        e.alive()?;
        e.secrets
            .get(key)
            .map(|s| Zeroizing::new(s.clone()))
            .ok_or_else(|| Error::NotFound(key.to_string()))
    }

    /// Run `f` over a sealed secret without copying it out.
    pub fn with_secret<T>(&self, key: &str, f: impl FnOnce(&[u8]) -> T) -> Result<T> {
        let e = self.inner.lock();
        e.alive()?;
        e.secrets
            .get(key)
            .map(|s| f(s))
            .ok_or_else(|| Error::NotFound(key.to_string()))
    }

    /// Fail with `enclave-destroyed` unless the enclave is alive.
    pub fn ensure_alive(&self) -> Result<()> {
        self.inner.lock().alive()
    }
}

/// All enclaves of one cloud server. Destroyed enclaves stay as tombstones.
pub struct EnclaveRegistry {
    clock: LogicalClock,
    next_id: AtomicU64,
    enclaves: RwLock<BTreeMap<EnclaveId, EnclaveHandle>>,
    by_file: RwLock<BTreeMap<Vec<u8>, EnclaveId>>,
}

impl EnclaveRegistry {
    pub fn new(clock: LogicalClock) -> Self {
        EnclaveRegistry {
            clock,
            next_id: AtomicU64::new(1),
            enclaves: RwLock::new(BTreeMap::new()),
            by_file: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn clock(&self) -> &LogicalClock {
        &self.clock
    }

    pub fn create_enclave(&self, file_id: &[u8]) -> Result<EnclaveHandle> {
        let mut by_file = self.by_file.write();
        if let Some(id) = by_file.get(file_id) {
            if self.enclaves.read()[id].is_alive() {
                return Err(Error::DuplicateEnclave);
            }
        }
        let id = EnclaveId(self.next_id.fetch_add(1, Ordering::SeqCst));
        let handle = EnclaveHandle {
            id,
            file_id: file_id.to_vec(),
            inner: Arc::new(Mutex::new(Enclave {
                state: EnclaveState::Alive,
                secrets: BTreeMap::new(),
                destroyed_at: None,
            })),
        };
        self.enclaves.write().insert(id, handle.clone());
        by_file.insert(file_id.to_vec(), id);
        Ok(handle)
    }

    /// Handle of the most recent enclave bound to `file_id`, alive or not.
    pub fn handle(&self, file_id: &[u8]) -> Option<EnclaveHandle> {
        let id = *self.by_file.read().get(file_id)?;
        self.enclaves.read().get(&id).cloned()
    }

    pub fn status(&self, file_id: &[u8]) -> Option<EnclaveStatus> {
        let h = self.handle(file_id)?;
        let e = h.inner.lock();
        Some(EnclaveStatus {
            enclave_id: h.id,
            state: e.state,
            destroyed_at: e.destroyed_at,
        })
    }

    /// Irreversibly destroy the enclave behind `handle`.
    pub fn destroy_enclave(&self, handle: &EnclaveHandle) -> Result<DeletionReceipt> {
        let mut e = handle.inner.lock();
        if e.state == EnclaveState::Destroyed {
            return Err(Error::AlreadyDestroyed);
        }
        let zeroized_bytes = e.wipe();
        let now = self.clock.now();
        e.state = EnclaveState::Destroyed;
        e.destroyed_at = Some(now);
        Ok(DeletionReceipt {
            file_id: handle.file_id.clone(),
            enclave_id: handle.id,
            destroyed_at: now,
            zeroized_bytes,
        })
    }

    /// Delete a file by destroying its alive enclave.
    pub fn delete_file(&self, file_id: &[u8]) -> Result<DeletionReceipt> {
        match self.handle(file_id) {
            Some(h) if h.is_alive() => self.destroy_enclave(&h),
            _ => Err(Error::UnknownFile),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn registry() -> EnclaveRegistry {
        EnclaveRegistry::new(LogicalClock::new())
    }

    #[test]
    fn create_gives_alive_enclave() {
        let r = registry();
        let h = r.create_enclave(b"f1").unwrap();
        assert_eq!(h.state(), EnclaveState::Alive);
        assert_eq!(r.create_enclave(b"f1").unwrap_err(), Error::DuplicateEnclave);
    }

    #[test]
    fn enclaves_are_isolated() {
        let r = registry();
        let a = r.create_enclave(b"a").unwrap();
        let b = r.create_enclave(b"b").unwrap();
        a.seal("v", b"secret").unwrap();
        assert_eq!(b.unseal("v").unwrap_err(), Error::NotFound("v".into()));
    }

    #[test]
    fn seal_unseal_and_not_found() {
        let r = registry();
        let h = r.create_enclave(b"f").unwrap();
        h.seal("k", &[1, 2, 3]).unwrap();
        assert_eq!(h.unseal("k").unwrap().as_slice(), &[1, 2, 3]);
        assert!(matches!(h.unseal("other"), Err(Error::NotFound(_))));
    }

    #[test]
    fn destroy_is_final_and_leaves_tombstone() {
        let r = registry();
        r.clock().advance_to(9).unwrap();
        let h = r.create_enclave(b"f").unwrap();
        h.seal("k", &[7; 40]).unwrap();
        let receipt = r.destroy_enclave(&h).unwrap();
        assert_eq!(receipt.destroyed_at, 9);
        assert_eq!(receipt.zeroized_bytes, 40);
        assert_eq!(h.unseal("k").unwrap_err(), Error::EnclaveDestroyed);
        assert_eq!(h.seal("k", &[1]).unwrap_err(), Error::EnclaveDestroyed);
        assert_eq!(r.destroy_enclave(&h).unwrap_err(), Error::AlreadyDestroyed);
        let status = r.status(b"f").unwrap();
        assert_eq!(status.state, EnclaveState::Destroyed);
        assert_eq!(status.destroyed_at, Some(9));
    }

    #[test]
    fn delete_file_twice_is_unknown_file() {
        let r = registry();
        r.create_enclave(b"f").unwrap();
        r.delete_file(b"f").unwrap();
        assert_eq!(r.delete_file(b"f").unwrap_err(), Error::UnknownFile);
        assert_eq!(r.delete_file(b"never").unwrap_err(), Error::UnknownFile);
    }

    #[test]
    fn new_enclave_after_destroy_is_fresh() {
        let r = registry();
        let old = r.create_enclave(b"f").unwrap();
        old.seal("k", b"x").unwrap();
        r.destroy_enclave(&old).unwrap();
        let new = r.create_enclave(b"f").unwrap();
        assert_ne!(new.id(), old.id());
        assert!(matches!(new.unseal("k"), Err(Error::NotFound(_))));
        assert_eq!(old.unseal("k").unwrap_err(), Error::EnclaveDestroyed);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Seal(u8, Vec<u8>),
        Unseal(u8),
        Destroy,
        Delete,
        Recreate,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0u8..4, proptest::collection::vec(any::<u8>(), 1..16)).prop_map(|(k, v)| Op::Seal(k, v)),
            (0u8..4).prop_map(Op::Unseal),
            Just(Op::Destroy),
            Just(Op::Delete),
            Just(Op::Recreate),
        ]
    }

    proptest! {
        #[test]
        fn nothing_sealed_before_destroy_is_readable_after(
            before in proptest::collection::vec(op(), 0..10),
            after in proptest::collection::vec(op(), 0..30),
        ) {
            let r = registry();
            let h = r.create_enclave(b"f").unwrap();
            for op in &before {
                if let Op::Seal(k, v) = op {
                    h.seal(&k.to_string(), v).unwrap();
                }
            }
            r.destroy_enclave(&h).unwrap();

            // Model of whatever enclave is currently bound to the file.
            let mut current = h.clone();
            let mut model: Option<BTreeMap<String, Vec<u8>>> = None;
            for op in &after {
                match op {
                    Op::Seal(k, v) => {
                        let res = current.seal(&k.to_string(), v);
                        match model.as_mut() {
                            Some(m) => { res.unwrap(); m.insert(k.to_string(), v.clone()); }
                            None => prop_assert_eq!(res.unwrap_err(), Error::EnclaveDestroyed),
                        }
                    }
                    Op::Unseal(k) => {
                        prop_assert_eq!(h.unseal(&k.to_string()).unwrap_err(), Error::EnclaveDestroyed);
                        let res = current.unseal(&k.to_string());
                        match model.as_ref() {
                            Some(m) => match m.get(&k.to_string()) {
                                Some(v) => {
                                    let got = res.unwrap();
                                    prop_assert_eq!(got.as_slice(), v.as_slice());
                                }
                                None => prop_assert!(matches!(res, Err(Error::NotFound(_)))),
                            },
                            None => prop_assert_eq!(res.unwrap_err(), Error::EnclaveDestroyed),
                        }
                    }
                    Op::Destroy => {
                        let res = r.destroy_enclave(&current);
                        prop_assert_eq!(res.is_ok(), model.take().is_some());
                    }
                    Op::Delete => {
                        let res = r.delete_file(b"f");
                        prop_assert_eq!(res.is_ok(), model.take().is_some());
                    }
                    Op::Recreate => {
                        let res = r.create_enclave(b"f");
                        if model.is_some() {
                            prop_assert_eq!(res.unwrap_err(), Error::DuplicateEnclave);
                        } else {
                            current = res.unwrap();
                            model = Some(BTreeMap::new());
                        }
                    }
                }
            }
            prop_assert_eq!(h.state(), EnclaveState::Destroyed);
        }
    }
}
