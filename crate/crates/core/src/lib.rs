// SPDX-License-Identifier: Apache-2.0

//! Verifiable deletion of outsourced data.
//!
//! A data owner tags its file, a cloud provider encrypts it inside a per-file
//! enclave and proves the encryption was done correctly, and a smart
//! contract arbitrates leakage audits after the enclave is destroyed.

pub mod audit;
pub mod bsgs;
pub mod challenge;
pub mod clock;
pub mod cloud;
pub mod codec;
pub mod contract;
pub mod enclave;
pub mod encoding;
pub mod error;
pub mod group;
pub mod nizk;
pub mod owner;
pub mod params;

pub use audit::{audit_respond, verify_audit_response, AuditResponse, LeakedBlocks};
pub use challenge::{Challenge, ChallengeEntry};
pub use clock::LogicalClock;
pub use cloud::{CiphertextMatrix, CloudServer, EncProof, EncTagSet, ServerKeyPair};
pub use contract::{Blockchain, ContractId, ContractState, Deadlines, Ledger, OwnerState, TransitionRecord};
pub use codec::{derive_file_id, join, split, BlockMatrix, FileManifest};
pub use enclave::{DeletionReceipt, EnclaveHandle, EnclaveId, EnclaveRegistry, EnclaveState};
pub use error::{Error, Result};
pub use group::{Bls12, Engine, GroupElem, ScalarField, ToyGroup};
pub use owner::{
    gen_challenge, outsource, verify_encryption_proof, OwnerKeyPair, SectorGenerators, TagSet, Verdict,
};
pub use params::SystemParams;
