// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Models for fast optical-frequency qubits in doped crystals.
//!
//! - [`quantities`]: constants and spectroscopic units.
//! - [`species`]: ion level data and qubit/auxiliary role rules.
//! - [`pulses`]: π-pulse intensity, energy and field; pulse sequences.
//! - [`paircenter`]: dark/bright states of pair centres.
//! - [`interactions`]: Stark and dipole blockade shifts.
//! - [`ensemble`]: dopant Monte Carlo, spectral selection, channel allocation.
//! - [`dynamics`]: unitary and Lindblad propagation of small level systems.
//! - [`gates`]: blockade CZ/CNOT protocols, fidelities and sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod gates;
pub mod interactions;
pub mod paircenter;
pub mod pulses;
pub mod quantities;
pub mod species;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use dynamics::{CMatrix, CVector, Level, LevelSystem, QubitLevels, StaticCoupling};
pub use ensemble::{CrystalSpec, DopedCenter, LineShape};
pub use gates::{GateKind, GateReport, GateScenario, Noise};
pub use interactions::BlockadeModel;
pub use paircenter::{PairMode, PairParams, PairStates};
pub use pulses::{PulseDecl, PulseSequence, PulseSpec, TransitionTarget};
pub use quantities::{SpectralQuantity, SpectralUnit};
pub use species::{Role, SpeciesRegistry, SpeciesScheme};
