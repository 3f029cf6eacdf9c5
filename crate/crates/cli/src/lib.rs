// SPDX-License-Identifier: Apache-2.0

//! Scenario runner, artifact-producing verbs and benchmarks for the
//! verifiable deletion protocol.

pub mod bench;
pub mod error;
pub mod scenario;
pub mod session;
pub mod transcript;
pub mod verbs;

pub use error::{CliError, Result};
pub use scenario::{run_scenario, Action, Fault, Outcome, Scenario};
pub use session::{Session, SessionConfig};
pub use transcript::Transcript;
