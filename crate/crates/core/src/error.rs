// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the fastoqc models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: unknown tags, unparsable data files.
    #[error("configuration error: {0}")]
    Config(String),

    /// Structurally valid input that breaks a declared invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A referenced species, level or qubit does not exist.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Argument outside the physical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested problem exceeds a hard resource cap.
    #[error("resource error: {0}")]
    Resource(String),

    /// Numerical failure during propagation (norm or trace drift, decomposition failure).
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Validation(_) => "validation",
            Error::Lookup(_) => "lookup",
            Error::Domain(_) => "domain",
            Error::Resource(_) => "resource",
            Error::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Error::Config(m)
            | Error::Validation(m)
            | Error::Lookup(m)
            | Error::Domain(m)
            | Error::Resource(m)
            | Error::Numerical(m) => m,
        }
    }

    /// Prefix the message with some context (scenario name, grid point, ...).
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Validation(m) => Error::Validation(format!("{ctx}: {m}")),
            Error::Lookup(m) => Error::Lookup(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Resource(m) => Error::Resource(format!("{ctx}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
