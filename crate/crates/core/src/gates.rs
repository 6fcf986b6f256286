// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Two-qubit blockade gates: scenario construction, the canonical
//! π / 2π / π sequence, scoring and parameter sweeps.
//!
//! Each logical qubit carries levels `0`, `1` and `1'` (plus optionally
//! `g`). The auxiliary-auxiliary state |1'1'⟩ is shifted by δ. With equal
//! pulse phases the canonical sequence gives diag(1, −1, −1, −1) in the
//! computational basis, which is CZ up to the local Z⊗Z; that matrix is the
//! scoring target for [`GateKind::Cz`]. [`GateKind::Cnot`] wraps the target
//! in R_y(π/2) pulses on 0↔1, turning it into a CNOT truth table.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, CMatrix, Level, LevelSystem, QubitLevels, StaticCoupling};
use crate::error::{domain, validation, Result};
use crate::interactions::BlockadeModel;
use crate::paircenter::{pair_eigensystem, PairMode, PairParams};
use crate::pulses::{PulseSequence, PulseSpec, TransitionTarget};
use crate::species::{Role, SpeciesScheme};

pub const ZERO: &str = "0";
pub const ONE: &str = "1";
pub const AUX: &str = "1'";
pub const GROUND: &str = "g";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    #[default]
    Cz,
    Cnot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    #[serde(default)]
    pub lifetimes: bool,
    #[serde(default)]
    pub dephasing: bool,
}

impl Noise {
    pub const NONE: Noise = Noise { lifetimes: false, dephasing: false };
    pub const ALL: Noise = Noise { lifetimes: true, dephasing: true };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateCoupling {
    /// Shift of |1'1'⟩, Hz.
    pub aux_shift_hz: f64,
    /// Shift of |00⟩, Hz (pair-centre dark-dark coupling; 0 otherwise).
    pub zero_shift_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateScenario {
    pub label: String,
    /// Levels with all physical rates; `noise` selects what is switched on.
    pub system: LevelSystem,
    pub control: usize,
    pub target: usize,
    pub sequence: PulseSequence,
    pub noise: Noise,
    pub kind: GateKind,
    pub coupling: GateCoupling,
}

impl GateScenario {
    pub fn check(&self) -> Result<()> {
        if self.system.qubit_count() != 2 {
            return Err(validation("gate scenarios need exactly two qubits"));
        }
        if self.control > 1 || self.target > 1 || self.control == self.target {
            return Err(validation("control and target must be qubits 0 and 1 in some order"));
        }
        for q in 0..2 {
            for role in [ZERO, ONE, AUX] {
                self.system.level_index(q, role).map_err(|e| e.context("gate roles"))?;
            }
        }
        for p in self.sequence.pulses() {
            let t = &p.pulse.target;
            self.system.level_index(t.qubit, &t.from).map_err(|e| e.context(format!("pulse {}", p.number)))?;
            self.system.level_index(t.qubit, &t.to).map_err(|e| e.context(format!("pulse {}", p.number)))?;
        }
        Ok(())
    }

    /// The level system with only the selected noise channels.
    pub fn effective_system(&self) -> Result<LevelSystem> {
        let mut qubits = self.system.qubits().to_vec();
        for q in &mut qubits {
            if !self.noise.dephasing {
                q.dephasing = 0.0;
            }
            if !self.noise.lifetimes {
                for l in &mut q.levels {
                    l.decay_rate = 0.0;
                }
            }
        }
        LevelSystem::new(qubits, self.system.couplings().to_vec())
    }

    pub fn with_sequence(mut self, sequence: PulseSequence) -> Self {
        self.sequence = sequence;
        self
    }

    pub fn swapped_roles(&self) -> Self {
        Self { control: self.target, target: self.control, ..self.clone() }
    }
}

fn square(qubit: usize, from: &str, to: &str, area: f64, rabi: f64, phase: f64) -> PulseSpec {
    PulseSpec {
        carrier_cm: 0.0,
        spectral_width: rabi / area,
        rabi_frequency: rabi,
        pulse_area: area,
        phase,
        envelope: Default::default(),
        target: TransitionTarget { qubit, from: from.into(), to: to.into() },
        detuning: 0.0,
    }
}

/// π(control 1→1'), 2π(target 1→1'), π(control 1'→1), all at Rabi
/// frequency `rabi` (rad/s). CNOT adds R_y(π/2) on the target's 0↔1
/// before and after.
pub fn canonical_blockade_sequence(system: &LevelSystem, control: usize, target: usize, rabi: f64, kind: GateKind) -> Result<PulseSequence> {
    if !(rabi > 0.0 && rabi.is_finite()) {
        return Err(validation("Rabi frequency must be > 0"));
    }
    for q in [control, target] {
        for role in [ZERO, ONE, AUX] {
            system.level_index(q, role).map_err(|e| e.context("canonical blockade sequence"))?;
        }
    }
    let mut pulses = Vec::new();
    if kind == GateKind::Cnot {
        pulses.push(square(target, ZERO, ONE, PI / 2.0, rabi, PI / 2.0));
    }
    pulses.push(square(control, ONE, AUX, PI, rabi, 0.0));
    pulses.push(square(target, ONE, AUX, 2.0 * PI, rabi, 0.0));
    pulses.push(square(control, AUX, ONE, PI, rabi, 0.0));
    if kind == GateKind::Cnot {
        pulses.push(square(target, ZERO, ONE, PI / 2.0, rabi, PI / 2.0));
    }
    PulseSequence::from_pulses(pulses)
}

/// Ideal 4×4 map in the (qubit 0, qubit 1) computational basis.
pub fn ideal_gate(kind: GateKind, target: usize) -> CMatrix {
    let c = |x: f64| Complex64::new(x, 0.0);
    let core = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0), c(-1.0), c(-1.0)]));
    match kind {
        GateKind::Cz => core,
        GateKind::Cnot => {
            let r = CMatrix::from_row_slice(2, 2, &[c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]);
            let id = CMatrix::identity(2, 2);
            let local = if target == 1 { id.kronecker(&r) } else { r.kronecker(&id) };
            &local * core * &local
        }
    }
}

/// Classical output of each computational input, for the truth table.
pub fn ideal_outputs(kind: GateKind, control: usize, target: usize) -> [usize; 4] {
    let mut out = [0, 1, 2, 3];
    if kind == GateKind::Cnot {
        for (i, o) in out.iter_mut().enumerate() {
            let bits = [i >> 1, i & 1];
            if bits[control] == 1 {
                let mut b = bits;
                b[target] ^= 1;
                *o = b[0] << 1 | b[1];
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Unitary,
    Lindblad,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub label: String,
    pub kind: GateKind,
    pub route: Route,
    /// Row = input |q0 q1⟩ (00, 01, 10, 11), column = output population.
    pub truth_table: [[f64; 4]; 4],
    pub truth_table_fidelity: f64,
    pub average_fidelity: f64,
    /// Largest population left outside the computational subspace.
    pub leakage: f64,
    /// arg(U₀₀·U₁₁·U₀₁*·U₁₀*) of the diagonal; π for the ideal CZ core.
    pub entangling_phase: Option<f64>,
    /// max |(M†M − I)_ij| for the computational block, unitary route.
    pub unitarity_deviation: Option<f64>,
    pub duration_s: f64,
    pub aux_shift_hz: f64,
    /// |0⟩ decay rate of each qubit, 1/s.
    pub zero_decay_rates: [f64; 2],
}

fn computational_indices(system: &LevelSystem) -> Result<[usize; 4]> {
    let mut idx = [0; 4];
    for (k, slot) in idx.iter_mut().enumerate() {
        let a = if k >> 1 == 1 { ONE } else { ZERO };
        let b = if k & 1 == 1 { ONE } else { ZERO };
        *slot = system.basis_index(&[a, b])?;
    }
    Ok(idx)
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Wrapped to (−π, π].
fn wrap(phase: f64) -> f64 {
    let p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p - 2.0 * PI
    } else {
        p
    }
}

/// Either route reduces to the process block on the computational span:
/// `chi(i, j)` = E(|i⟩⟨j|) restricted to the subspace.
fn score(
    scenario: &GateScenario,
    route: Route,
    chi: &dyn Fn(usize, usize) -> CMatrix,
    unitary_block: Option<&CMatrix>,
) -> GateReport {
    let d = 4usize;
    let v = ideal_gate(scenario.kind, scenario.target);
    let outputs = ideal_outputs(scenario.kind, scenario.control, scenario.target);
    let mut truth = [[0.0; 4]; 4];
    let mut leakage: f64 = 0.0;
    let mut retained = 0.0;
    for (i, row) in truth.iter_mut().enumerate() {
        let rho = chi(i, i);
        let mut kept = 0.0;
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = clamp01(rho[(j, j)].re);
            kept += rho[(j, j)].re;
        }
        retained += kept;
        leakage = leakage.max(clamp01(1.0 - kept));
    }
    let tt = (0..4).map(|i| truth[i][outputs[i]]).sum::<f64>() / 4.0;
    // F_e = (1/d²) Σ_ij ⟨V i| E(|i⟩⟨j|) |V j⟩
    let mut fe = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            let e = chi(i, j);
            let vi = v.column(i);
            let vj = v.column(j);
            fe += (vi.adjoint() * &e * vj)[(0, 0)];
        }
    }
    let fe = fe.re / (d * d) as f64;
    let avg = (d as f64 * fe + retained / d as f64) / (d as f64 + 1.0);
    let entangling_phase = (scenario.kind == GateKind::Cz).then(|| {
        let a = chi(0, 1)[(0, 1)];
        let b = chi(2, 3)[(2, 3)];
        wrap((a * b.conj()).arg())
    });
    let unitarity_deviation = unitary_block.map(|m| {
        let g = m.adjoint() * m - CMatrix::identity(d, d);
        g.iter().map(|z| z.norm()).fold(0.0, f64::max)
    });
    let qubits = scenario.system.qubits();
    let zero_rate = |q: usize| {
        let l = scenario.system.level_index(q, ZERO).unwrap();
        if scenario.noise.lifetimes {
            qubits[q].levels[l].decay_rate
        } else {
            0.0
        }
    };
    GateReport {
        label: scenario.label.clone(),
        kind: scenario.kind,
        route,
        truth_table: truth,
        truth_table_fidelity: clamp01(tt),
        average_fidelity: clamp01(avg),
        leakage,
        entangling_phase,
        unitarity_deviation,
        duration_s: scenario.sequence.total_duration(),
        aux_shift_hz: scenario.coupling.aux_shift_hz,
        zero_decay_rates: [zero_rate(0), zero_rate(1)],
    }
}

/// Runs all computational inputs and scores the result. Closed systems go
/// through the unitary, open ones through the full superoperator.
pub fn run_protocol(scenario: &GateScenario) -> Result<GateReport> {
    scenario.check().map_err(|e| e.context(&scenario.label))?;
    let system = scenario.effective_system()?;
    let comp = computational_indices(&system)?;
    let ctx = |e: crate::Error| e.context(format!("scenario `{}`", scenario.label));
    if system.is_closed() {
        let u = dynamics::sequence_unitary(&system, &scenario.sequence).map_err(ctx)?;
        let m = CMatrix::from_fn(4, 4, |r, c| u[(comp[r], comp[c])]);
        let chi = |i: usize, j: usize| {
            let a = m.column(i);
            let b = m.column(j);
            a * b.adjoint()
        };
        Ok(score(scenario, Route::Unitary, &chi, Some(&m)))
    } else {
        let s = dynamics::sequence_superoperator(&system, &scenario.sequence).map_err(ctx)?;
        let n = system.dimension();
        let outputs: Vec<Vec<CMatrix>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        let mut op = CMatrix::zeros(n, n);
                        op[(comp[i], comp[j])] = Complex64::new(1.0, 0.0);
                        let out = dynamics::apply_superoperator(&s, &op);
                        CMatrix::from_fn(4, 4, |r, c| out[(comp[r], comp[c])])
                    })
                    .collect()
            })
            .collect();
        for i in 0..4 {
            let mut op = CMatrix::zeros(n, n);
            op[(comp[i], comp[i])] = Complex64::new(1.0, 0.0);
            dynamics::check_density(&dynamics::apply_superoperator(&s, &op), &format!("for input {i}")).map_err(ctx)?;
        }
        let chi = |i: usize, j: usize| outputs[i][j].clone();
        Ok(score(scenario, Route::Lindblad, &chi, None))
    }
}

fn three_level_qubit(zero_decay: f64, one_decay: f64, aux_decay: f64, dephasing: f64) -> QubitLevels {
    // `1` first so it is the default decay target.
    QubitLevels {
        levels: vec![Level::new(ONE).decaying(one_decay), Level::new(ZERO).decaying(zero_decay), Level::new(AUX).decaying(aux_decay)],
        dephasing,
    }
}

/// Minimal symmetric scenario: lossless three-level qubits, |1'1'⟩ shifted
/// by `shift` (rad/s), canonical sequence at Rabi frequency `rabi`.
/// `dephasing` is Γ_h on both qubits (switched on only if nonzero).
pub fn ideal_scenario(shift: f64, rabi: f64, dephasing: f64, kind: GateKind) -> Result<GateScenario> {
    let q = three_level_qubit(0.0, 0.0, 0.0, dephasing);
    let system = LevelSystem::new(
        vec![q.clone(), q],
        vec![StaticCoupling::ConditionalShift { qubits: (0, 1), levels: (AUX.into(), AUX.into()), shift }],
    )?;
    let sequence = canonical_blockade_sequence(&system, 0, 1, rabi, kind)?;
    Ok(GateScenario {
        label: format!("ideal δ/Ω = {}", shift / rabi),
        system,
        control: 0,
        target: 1,
        sequence,
        noise: Noise { lifetimes: false, dephasing: dephasing > 0.0 },
        kind,
        coupling: GateCoupling { aux_shift_hz: shift / (2.0 * PI), zero_shift_hz: 0.0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairQubitParams {
    pub pair: PairParams,
    /// Radiative lifetime τ₁ of an isolated centre, s.
    pub single_lifetime: f64,
}

/// One logical qubit per pair centre: |0⟩ dark, |1⟩ pair ground, |1'⟩
/// bright. Shifts from the dipole law at distance `r`: bright-bright on
/// |1'1'⟩, dark-dark on |00⟩.
#[allow(clippy::too_many_arguments)]
pub fn pair_center_scenario(
    a: &PairQubitParams,
    b: &PairQubitParams,
    r: f64,
    model: &BlockadeModel,
    mode: PairMode,
    rabi: f64,
    dephasing: f64,
    noise: Noise,
    kind: GateKind,
) -> Result<GateScenario> {
    let mut qubits = Vec::new();
    let mut strengths = Vec::new();
    for (name, p) in [("a", a), ("b", b)] {
        if p.pair.exchange == 0.0 {
            return Err(domain(format!("pair {name}: zero exchange leaves no dark/bright splitting")));
        }
        if !(p.single_lifetime > 0.0) {
            return Err(domain(format!("pair {name}: lifetime must be > 0")));
        }
        let s = pair_eigensystem(&p.pair, mode).map_err(|e| e.context(format!("pair {name}")))?;
        let f1 = p.pair.single_oscillator_strength;
        let rate = |f: f64| f / (f1 * p.single_lifetime);
        qubits.push(three_level_qubit(rate(s.f_dark), 0.0, rate(s.f_bright), dephasing));
        strengths.push((s.f_dark, s.f_bright));
    }
    let bright_hz = model.dipole_shift(strengths[0].1, strengths[1].1, r)?;
    let dark_hz = model.dipole_shift(strengths[0].0, strengths[1].0, r)?;
    let system = LevelSystem::new(
        qubits,
        vec![
            StaticCoupling::ConditionalShift { qubits: (0, 1), levels: (AUX.into(), AUX.into()), shift: 2.0 * PI * bright_hz },
            StaticCoupling::ConditionalShift { qubits: (0, 1), levels: (ZERO.into(), ZERO.into()), shift: 2.0 * PI * dark_hz },
        ],
    )?;
    let sequence = canonical_blockade_sequence(&system, 0, 1, rabi, kind)?;
    Ok(GateScenario {
        label: format!("pair centres at R = {r}"),
        system,
        control: 0,
        target: 1,
        sequence,
        noise,
        kind,
        coupling: GateCoupling { aux_shift_hz: bright_hz, zero_shift_hz: dark_hz },
    })
}

/// Levels of one REI qubit from its role assignment. The energy-zero level
/// is always kept (as `g` or under its role) and receives all decay.
pub fn rei_qubit(scheme: &SpeciesScheme, dephasing: f64) -> Result<QubitLevels> {
    let ground = scheme
        .ground_level()
        .ok_or_else(|| validation(format!("{}: no energy-zero level", scheme.name)))?;
    let label_of = |role: Role| match role {
        Role::Qubit0 => Some(ZERO),
        Role::Qubit1 => Some(ONE),
        Role::Auxiliary => Some(AUX),
        Role::Ground => Some(GROUND),
        Role::Unassigned => None,
    };
    let ground_label = label_of(ground.role).unwrap_or(GROUND).to_string();
    let mut levels = vec![Level::new(ground_label)];
    for role in [Role::Qubit0, Role::Qubit1, Role::Auxiliary] {
        let l = scheme
            .level_with_role(role)
            .ok_or_else(|| validation(format!("{}: no level with role {role:?}", scheme.name)))?;
        if l.energy_cm == 0.0 {
            continue;
        }
        levels.push(Level::new(label_of(role).unwrap()).decaying(l.decay_rate()));
    }
    Ok(QubitLevels { levels, dephasing })
}

/// REI scenario with |1'1'⟩ shifted by `shift_hz`.
pub fn rei_scenario(
    a: &SpeciesScheme,
    b: &SpeciesScheme,
    shift_hz: f64,
    rabi: f64,
    dephasing: f64,
    noise: Noise,
    kind: GateKind,
) -> Result<GateScenario> {
    let system = LevelSystem::new(
        vec![rei_qubit(a, dephasing)?, rei_qubit(b, dephasing)?],
        vec![StaticCoupling::ConditionalShift { qubits: (0, 1), levels: (AUX.into(), AUX.into()), shift: 2.0 * PI * shift_hz }],
    )?;
    let sequence = canonical_blockade_sequence(&system, 0, 1, rabi, kind)?;
    Ok(GateScenario {
        label: format!("{} / {}", a.name, b.name),
        system,
        control: 0,
        target: 1,
        sequence,
        noise,
        kind,
        coupling: GateCoupling { aux_shift_hz: shift_hz, zero_shift_hz: 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub values: Vec<(String, f64)>,
}

impl SweepPoint {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Cartesian product, last axis fastest.
pub fn grid(axes: &[SweepAxis]) -> Result<Vec<SweepPoint>> {
    if axes.is_empty() {
        return Err(validation("sweep needs at least one axis"));
    }
    for a in axes {
        if a.values.is_empty() || a.values.iter().any(|v| !v.is_finite()) {
            return Err(validation(format!("sweep axis `{}` must hold finite values", a.name)));
        }
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    Ok((0..total)
        .map(|index| {
            let mut rem = index;
            let mut values = vec![(String::new(), 0.0); axes.len()];
            for (k, a) in axes.iter().enumerate().rev() {
                values[k] = (a.name.clone(), a.values[rem % a.values.len()]);
                rem /= a.values.len();
            }
            SweepPoint { index, values }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<(String, f64)>,
    pub report: Option<GateReport>,
    pub error: Option<String>,
}

/// Runs every point not already in `completed` (successful rows are
/// reused by index). Failures are recorded per row; output is in grid order.
pub fn sweep<F>(points: &[SweepPoint], build: F, completed: &[SweepRow]) -> Vec<SweepRow>
where
    F: Fn(&SweepPoint) -> Result<GateScenario> + Sync,
{
    points
        .par_iter()
        .map(|p| {
            if let Some(done) = completed.iter().find(|r| r.index == p.index && r.error.is_none() && r.values == p.values) {
                return done.clone();
            }
            match build(p).and_then(|s| run_protocol(&s)) {
                Ok(report) => SweepRow { index: p.index, values: p.values.clone(), report: Some(report), error: None },
                Err(e) => SweepRow { index: p.index, values: p.values.clone(), report: None, error: Some(e.to_string()) },
            }
        })
        .collect()
}

/// Running maximum from the right: the smallest nonincreasing curve above `y`.
pub fn upper_envelope(y: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
