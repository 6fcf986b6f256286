// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Criterion benchmarks for fastoqc; see `benches/`.
