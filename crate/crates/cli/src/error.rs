// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scenario-invalid: {0}")]
    ScenarioInvalid(String),
    #[error("{context}: {source}")]
    Protocol {
        context: String,
        #[source]
        source: sevdel_core::Error,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Stable short name, matching the core error codes where possible.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::ScenarioInvalid(_) => "scenario-invalid",
            CliError::Protocol { source, .. } => source.code(),
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
        }
    }
}

/// Attach a step description to a core error.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for sevdel_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Protocol {
            context: what(),
            source,
        })
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| CliError::Io {
            context: what(),
            source,
        })
    }
}
