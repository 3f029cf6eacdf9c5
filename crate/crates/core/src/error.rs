// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the protocol, enclave and contract layers can report.
///
/// [`Error::code`] gives the stable kebab-case name used in transcripts.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid group element: {0}")]
    InvalidElement(&'static str),
    #[error("unknown hash domain {0:?}")]
    UnknownDomain(String),
    #[error("empty file")]
    EmptyFile,
    #[error("unsupported sector layout: {0}")]
    InvalidLayout(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("challenge count {count} outside 1..={n}")]
    CountOutOfRange { count: usize, n: usize },
    #[error("block index {index} outside 1..={n}")]
    IndexOutOfRange { index: u64, n: usize },
    #[error("malformed proof: {0}")]
    MalformedProof(String),
    #[error("missing ciphertext for block {0}")]
    MissingBlock(u64),
    #[error("discrete log outside the sector range")]
    DlogOutOfRange,

    #[error("enclave destroyed")]
    EnclaveDestroyed,
    #[error("enclave already destroyed")]
    AlreadyDestroyed,
    #[error("an alive enclave is already bound to this file")]
    DuplicateEnclave,
    #[error("enclave is bound to a different file")]
    EnclaveMismatch,
    #[error("sealed secret {0:?} not found")]
    NotFound(String),
    #[error("no alive enclave for file")]
    UnknownFile,

    #[error("insufficient balance: need {needed}, have {available}")]
    InsufficientBalance { needed: u64, available: u64 },
    #[error("deadline passed")]
    DeadlinePassed,
    #[error("operation outside its time window")]
    WrongWindow,
    #[error("contract in state {0}")]
    WrongState(String),
    #[error("owner already agreed")]
    DuplicateOwner,
    #[error("owner is not part of this contract")]
    UnknownOwner,
    #[error("tags already registered")]
    DuplicateTags,
    #[error("tags not registered")]
    TagsNotRegistered,
    #[error("invalid contract argument: {0}")]
    InvalidArgument(String),
    #[error("unknown contract {0}")]
    UnknownContract(usize),

    #[error("decode error: {0}")]
    Decode(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidElement(_) => "invalid-element",
            Error::UnknownDomain(_) => "unknown-domain",
            Error::EmptyFile => "empty-file",
            Error::InvalidLayout(_) => "invalid-layout",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::CountOutOfRange { .. } => "count-out-of-range",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::MalformedProof(_) => "malformed-proof",
            Error::MissingBlock(_) => "missing-block",
            Error::DlogOutOfRange => "dlog-out-of-range",
            Error::EnclaveDestroyed => "enclave-destroyed",
            Error::AlreadyDestroyed => "already-destroyed",
            Error::DuplicateEnclave => "duplicate-enclave",
            Error::EnclaveMismatch => "enclave-mismatch",
            Error::NotFound(_) => "not-found",
            Error::UnknownFile => "unknown-file",
            Error::InsufficientBalance { .. } => "insufficient-balance",
            Error::DeadlinePassed => "deadline-passed",
            Error::WrongWindow => "wrong-window",
            Error::WrongState(_) => "wrong-state",
            Error::DuplicateOwner => "duplicate-owner",
            Error::UnknownOwner => "unknown-owner",
            Error::DuplicateTags => "duplicate-tags",
            Error::TagsNotRegistered => "tags-not-registered",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::UnknownContract(_) => "unknown-contract",
            Error::Decode(_) => "decode-error",
        }
    }
}
