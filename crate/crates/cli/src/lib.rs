// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configs, runner and plot-data export for `fastoqc`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

use fastoqc_core::Error;

/// 2 for schema/reference problems, 3 for physics-domain and numerical
/// failures, 4 for resource caps and I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Validation(_) | Error::Lookup(_) => 2,
        Error::Domain(_) | Error::Numerical(_) => 3,
        Error::Resource(_) => 4,
    }
}

/// `error[kind]: message` on one line.
pub fn diagnostic(e: &Error) -> String {
    format!("error[{}]: {}", e.kind(), config::one_line(e.message()))
}
