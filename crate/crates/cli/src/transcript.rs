// SPDX-License-Identifier: Apache-2.0

//! JSON-lines transcripts.
//!
//! Each line is a canonical JSON object
//! `{"actor", "data", "event", "seq", "t"}` where `t` is logical time and
//! `seq` counts from 1. Large artifacts appear as a SHA-256 digest and a
//! byte length rather than inline.

use serde::Serialize;
use serde_json::{json, Value};
use sevdel_core::encoding::{canonical_json, sha256};

#[derive(Debug, Default, Clone)]
pub struct Transcript {
    lines: Vec<String>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: u64, actor: &str, event: &str, data: Value) {
        let line = json!({
            "seq": self.lines.len() + 1,
            "t": t,
            "actor": actor,
            "event": event,
            "data": data,
        });
        self.lines.push(canonical_json(&line).expect("json values serialize"));
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn to_jsonl(&self) -> String {
        self.lines.iter().map(|l| format!("{l}\n")).collect()
    }
}

/// `{"len", "sha256"}` summary of a byte artifact.
pub fn artifact(bytes: &[u8]) -> Value {
    json!({ "len": bytes.len(), "sha256": hex::encode(sha256(&[bytes])) })
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("protocol types serialize")
}
