// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! One-exciton structure of a pair optical centre: two nearly identical
//! two-level emitters with single-centre transition energies E ± ε coupled
//! by exchange Δ.
//!
//! Basis for the mixing coefficients is (centre 1 excited, centre 2 excited).
//! The one-exciton block is [[E+ε, Δ], [Δ, E−ε]]; the ground state has energy
//! 0 and the doubly excited state 2E.
//!
//! Two solvers are provided: the exact 2×2 diagonalization, and the
//! closed-form small-ε/Δ expressions (energies E ∓ Δ, coefficients
//! 2^{-1/2}(1 − ε/Δ, ∓(1 + ε/Δ)), f_dark = 2(ε/Δ)²f₁, f_bright = 2f₁).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// |ε/Δ| above which the perturbative solver flags its result.
pub const PERTURBATIVE_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairParams {
    /// Mean single-centre excitation energy E.
    pub mean_excitation: f64,
    /// Half the single-centre energy difference ε (same unit as E).
    pub half_detuning: f64,
    /// Exchange coupling Δ (same unit as E).
    pub exchange: f64,
    /// Oscillator strength f₁ of one isolated centre.
    pub single_oscillator_strength: f64,
    /// cos of the angle between the two transition dipoles; 1 for parallel.
    #[serde(default = "parallel")]
    pub dipole_orientation: f64,
}

fn parallel() -> f64 {
    1.0
}

impl PairParams {
    pub fn new(mean_excitation: f64, half_detuning: f64, exchange: f64, f1: f64) -> Self {
        Self {
            mean_excitation,
            half_detuning,
            exchange,
            single_oscillator_strength: f1,
            dipole_orientation: 1.0,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.half_detuning / self.exchange
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    Exact,
    Perturbative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEnergies {
    pub dark: f64,
    pub ground: f64,
    pub bright: f64,
    pub double: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairStates {
    pub mode: PairMode,
    pub energies: PairEnergies,
    /// (c_a, c_b) of the dark one-exciton state, sign fixed so c_a ≥ 0.
    pub dark: (f64, f64),
    pub bright: (f64, f64),
    pub f_dark: f64,
    pub f_bright: f64,
    /// Δ = 0: no exchange splitting, states are localized (or the symmetric
    /// convention when ε = 0 as well).
    pub degenerate: bool,
    /// Perturbative solver used outside |ε/Δ| < PERTURBATIVE_LIMIT.
    pub outside_regime: bool,
}

impl PairStates {
    /// Radiative lifetime of the dark state when the isolated centre has τ₁.
    pub fn dark_lifetime(&self, tau1: f64, f1: f64) -> f64 {
        tau1 * f1 / self.f_dark
    }

    pub fn bright_lifetime(&self, tau1: f64, f1: f64) -> f64 {
        tau1 * f1 / self.f_bright
    }
}

fn strength(c: (f64, f64), orientation: f64, f1: f64) -> f64 {
    (c.0 * c.0 + c.1 * c.1 + 2.0 * orientation * c.0 * c.1) * f1
}

fn positive_first(c: (f64, f64)) -> (f64, f64) {
    if c.0 < 0.0 || (c.0 == 0.0 && c.1 < 0.0) {
        (-c.0, -c.1)
    } else {
        c
    }
}

/// Exact diagonalization of the one-exciton block.
pub fn pair_eigensystem_exact(p: &PairParams) -> PairStates {
    let (e, eps, delta, f1, o) = (
        p.mean_excitation,
        p.half_detuning,
        p.exchange,
        p.single_oscillator_strength,
        p.dipole_orientation,
    );
    let w = delta.hypot(eps);
    let degenerate = delta == 0.0;
    // Mixing angle: upper state (cos θ, sin θ), lower (−sin θ, cos θ).
    let theta = if w == 0.0 {
        std::f64::consts::FRAC_PI_4
    } else {
        0.5 * delta.atan2(eps)
    };
    let (s, c) = theta.sin_cos();
    let upper = (c, s);
    let lower = (-s, c);
    // Dark is the antisymmetric-like state: lower for Δ ≥ 0, upper for Δ < 0.
    let (dark, bright, e_dark, e_bright) = if delta >= 0.0 {
        (lower, upper, e - w, e + w)
    } else {
        (upper, lower, e + w, e - w)
    };

    let (f_dark, f_bright) = if w == 0.0 {
        (strength(dark, o, f1), strength(bright, o, f1))
    } else {
        // 2·c_a·c_b = ∓|Δ|/W; 1 − |Δ|/W written as ε²/(W(W+|Δ|)) to keep
        // precision when ε ≪ Δ.
        let s_abs = delta.abs() / w;
        let one_minus = eps * eps / (w * (w + delta.abs()));
        let dark_factor = one_minus + (1.0 - o) * s_abs;
        let bright_factor = 1.0 + o * s_abs;
        (dark_factor * f1, bright_factor * f1)
    };

    PairStates {
        mode: PairMode::Exact,
        energies: PairEnergies { dark: e_dark, ground: 0.0, bright: e_bright, double: 2.0 * e },
        dark: positive_first(dark),
        bright: positive_first(bright),
        f_dark,
        f_bright,
        degenerate,
        outside_regime: false,
    }
}

/// First-order expressions in ε/Δ. Fails for Δ = 0.
pub fn pair_eigensystem_perturbative(p: &PairParams) -> Result<PairStates> {
    if p.exchange == 0.0 {
        return Err(domain("perturbative pair solution needs a nonzero exchange"));
    }
    let x = p.ratio();
    let e = p.mean_excitation;
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    let dark = (norm * (1.0 - x), -norm * (1.0 + x));
    let bright = (norm * (1.0 - x), norm * (1.0 + x));
    let (f1, o) = (p.single_oscillator_strength, p.dipole_orientation);
    Ok(PairStates {
        mode: PairMode::Perturbative,
        energies: PairEnergies {
            dark: e - p.exchange,
            ground: 0.0,
            bright: e + p.exchange,
            double: 2.0 * e,
        },
        dark,
        bright,
        f_dark: strength(dark, o, f1),
        f_bright: strength(bright, o, f1),
        degenerate: false,
        outside_regime: x.abs() >= PERTURBATIVE_LIMIT,
    })
}

pub fn pair_eigensystem(p: &PairParams, mode: PairMode) -> Result<PairStates> {
    match mode {
        PairMode::Exact => Ok(pair_eigensystem_exact(p)),
        PairMode::Perturbative => pair_eigensystem_perturbative(p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrightnessRatio {
    pub value: f64,
    /// Set when f_dark = 0 (ε = 0 with parallel dipoles).
    pub infinite: bool,
}

/// f_bright / f_dark from the exact eigensystem.
pub fn brightness_ratio(p: &PairParams) -> BrightnessRatio {
    let s = pair_eigensystem_exact(p);
    if s.f_dark == 0.0 {
        BrightnessRatio { value: f64::INFINITY, infinite: true }
    } else {
        BrightnessRatio { value: s.f_bright / s.f_dark, infinite: false }
    }
}
