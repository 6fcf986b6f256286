// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! π-pulse laser parameters and numbered pulse sequences.
//!
//! The pulse-intensity formula I = 4π²ℏΓ_L²k³/(3γ₀Z) is not dimensionally an
//! intensity in plain SI. It is evaluated in SI with the angular wave number
//! k = 2π·ṽ·n, and a single dimensionless factor [`INTENSITY_CALIBRATION`]
//! maps the result onto W/cm². The factor is fixed so that 20000 cm⁻¹,
//! γ₀ = 1/(1.5 ns) and Γ_L = 10⁹ s⁻¹ give ≈ 10² W/cm².

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::quantities::{wavenumber_to_angular, HBAR, Z0};

/// Dimensionless factor applied to the SI value of 4π²ℏΓ_L²k³/(3γ₀Z).
pub const INTENSITY_CALIBRATION: f64 = 9.12e10;

/// How a spectroscopic wavenumber ṽ becomes the k in the intensity formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaveNumberConvention {
    /// k = 2π·ṽ·n (ω·n/c). The calibration constant is tied to this one.
    #[default]
    Angular,
    /// k = ṽ·n, no 2π.
    Spectroscopic,
}

/// k in 1/m from a wavenumber in cm⁻¹.
pub fn wave_number_from_cm(cm_inv: f64, n: f64, convention: WaveNumberConvention) -> Result<f64> {
    if !(cm_inv >= 0.0) {
        return Err(domain(format!("wavenumber must be >= 0, got {cm_inv}")));
    }
    match convention {
        WaveNumberConvention::Angular => crate::quantities::wave_number(wavenumber_to_angular(cm_inv), n),
        WaveNumberConvention::Spectroscopic => {
            if !(n >= 1.0) {
                return Err(domain(format!("refractive index must be >= 1, got {n}")));
            }
            Ok(cm_inv * 100.0 * n)
        }
    }
}

/// Intensity (W/cm²) of a π-pulse driving a transition of radiative rate
/// γ₀ with spectral width Γ_L. `k` in 1/m, rates in 1/s.
pub fn pi_pulse_intensity(k: f64, gamma0: f64, gamma_l: f64, calibration: f64) -> Result<f64> {
    if !(gamma0 > 0.0) {
        return Err(domain(format!("radiative rate gamma0 must be > 0, got {gamma0}")));
    }
    if !(k > 0.0 && gamma_l > 0.0 && calibration > 0.0) {
        return Err(domain("wave number, spectral width and calibration must be > 0"));
    }
    let si = 4.0 * PI * PI * HBAR * gamma_l * gamma_l * k.powi(3) / (3.0 * gamma0 * Z0);
    Ok(calibration * si * 1e-4)
}

/// E_L = I·S/Γ_L with I in W/cm², S in cm², Γ_L in 1/s. Returns J.
pub fn pulse_energy(intensity: f64, area_cm2: f64, gamma_l: f64) -> Result<f64> {
    if !(intensity >= 0.0 && area_cm2 > 0.0 && gamma_l > 0.0) {
        return Err(domain("pulse energy needs I >= 0, S > 0, Gamma_L > 0"));
    }
    Ok(intensity * area_cm2 / gamma_l)
}

/// Plane-wave peak field E = sqrt(2·Z0·I) in V/cm, for I in W/cm².
pub fn peak_field(intensity: f64) -> Result<f64> {
    if !(intensity >= 0.0) {
        return Err(domain(format!("intensity must be >= 0, got {intensity}")));
    }
    // W/cm² -> W/m², V/m -> V/cm
    Ok((2.0 * Z0 * intensity * 1e4).sqrt() / 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub cross_section_cm2: f64,
    pub refractive_index: f64,
}

impl BeamGeometry {
    pub fn new(cross_section_cm2: f64, refractive_index: f64) -> Result<Self> {
        if !(cross_section_cm2 > 0.0) {
            return Err(domain("beam cross-section must be > 0"));
        }
        if !(refractive_index >= 1.0) {
            return Err(domain("refractive index must be >= 1"));
        }
        Ok(Self { cross_section_cm2, refractive_index })
    }
}

/// Radiative lifetime τ₀ of the driven transition; γ₀ = 1/τ₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterRadiative {
    pub lifetime_s: f64,
}

impl EmitterRadiative {
    pub fn new(lifetime_s: f64) -> Result<Self> {
        if !(lifetime_s > 0.0) {
            return Err(domain("radiative lifetime must be > 0"));
        }
        Ok(Self { lifetime_s })
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.lifetime_s
    }
}

/// Everything the `pulse-calc` command prints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseBudget {
    pub wave_number_per_m: f64,
    pub intensity_w_cm2: f64,
    pub energy_j: f64,
    pub peak_field_v_cm: f64,
}

pub fn pulse_budget(
    carrier_cm: f64,
    emitter: EmitterRadiative,
    gamma_l: f64,
    beam: BeamGeometry,
    convention: WaveNumberConvention,
) -> Result<PulseBudget> {
    let k = wave_number_from_cm(carrier_cm, beam.refractive_index, convention)?;
    let intensity = pi_pulse_intensity(k, emitter.rate(), gamma_l, INTENSITY_CALIBRATION)?;
    Ok(PulseBudget {
        wave_number_per_m: k,
        intensity_w_cm2: intensity,
        energy_j: pulse_energy(intensity, beam.cross_section_cm2, gamma_l)?,
        peak_field_v_cm: peak_field(intensity)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    #[default]
    Square,
    Gaussian,
}

/// The transition a pulse drives: `qubit` index, from-level, to-level.
/// Levels are named by their label in the scenario's level system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionTarget {
    pub qubit: usize,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Carrier in cm⁻¹ (informational; the simulation works in the rotating frame).
    pub carrier_cm: f64,
    /// Spectral width Γ_L, 1/s.
    pub spectral_width: f64,
    /// Rabi frequency Ω, rad/s.
    pub rabi_frequency: f64,
    /// Pulse area, rad.
    pub pulse_area: f64,
    /// Drive phase, rad.
    pub phase: f64,
    pub envelope: Envelope,
    pub target: TransitionTarget,
    /// Laser detuning ω_L − ω_transition, rad/s.
    pub detuning: f64,
}

impl PulseSpec {
    /// A resonant square pulse of `area` on `target` with the default
    /// Γ_L link: duration 1/Γ_L, Ω = area·Γ_L.
    pub fn square(target: TransitionTarget, area: f64, spectral_width: f64) -> Self {
        Self {
            carrier_cm: 0.0,
            spectral_width,
            rabi_frequency: area * spectral_width,
            pulse_area: area,
            phase: 0.0,
            envelope: Envelope::Square,
            target,
            detuning: 0.0,
        }
    }

    /// Duration for a square envelope, area/Ω.
    pub fn duration(&self) -> f64 {
        self.pulse_area / self.rabi_frequency
    }

    pub fn check(&self) -> Result<()> {
        if !(self.spectral_width > 0.0) {
            return Err(validation("pulse spectral width must be > 0"));
        }
        if !(self.pulse_area > 0.0) {
            return Err(validation("pulse area must be > 0"));
        }
        if !(self.rabi_frequency > 0.0 && self.rabi_frequency.is_finite()) {
            return Err(validation("pulse Rabi frequency must be > 0"));
        }
        if !self.detuning.is_finite() || !self.phase.is_finite() {
            return Err(validation("pulse detuning and phase must be finite"));
        }
        if self.envelope != Envelope::Square {
            return Err(validation("only square envelopes are supported by the propagator"));
        }
        if self.target.from == self.target.to {
            return Err(validation("pulse must drive two distinct levels"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumberedPulse {
    pub number: u32,
    pub pulse: PulseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PulseSequence {
    pulses: Vec<NumberedPulse>,
}

impl PulseSequence {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pulses(&self) -> &[NumberedPulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.pulses.iter().map(|p| p.pulse.duration()).sum()
    }

    /// Sequence numbered 1, 2, ... in the given order.
    pub fn from_pulses(pulses: impl IntoIterator<Item = PulseSpec>) -> Result<Self> {
        let numbered = pulses
            .into_iter()
            .enumerate()
            .map(|(i, pulse)| NumberedPulse { number: i as u32 + 1, pulse })
            .collect();
        Self::from_numbered(numbered)
    }

    pub fn from_numbered(pulses: Vec<NumberedPulse>) -> Result<Self> {
        for (i, p) in pulses.iter().enumerate() {
            let expected_min = if i == 0 { 1 } else { pulses[i - 1].number + 1 };
            if p.number < expected_min {
                return Err(validation(format!(
                    "pulse numbers must increase strictly from 1 (pulse {} after {})",
                    p.number,
                    if i == 0 { 0 } else { pulses[i - 1].number }
                )));
            }
            p.pulse.check().map_err(|e| e.context(format!("pulse {}", p.number)))?;
        }
        Ok(Self { pulses })
    }
}

/// Declarative pulse entry, as written in scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseDecl {
    #[serde(default)]
    pub number: Option<u32>,
    pub qubit: usize,
    pub from: String,
    pub to: String,
    /// Pulse area in units of π.
    #[serde(default = "one")]
    pub area_pi: f64,
    /// Γ_L in 1/s; falls back to the sequence default.
    #[serde(default)]
    pub spectral_width: Option<f64>,
    /// Ω in rad/s; defaults to area·Γ_L.
    #[serde(default)]
    pub rabi_frequency: Option<f64>,
    #[serde(default)]
    pub detuning: f64,
    /// Drive phase in units of π.
    #[serde(default)]
    pub phase_pi: f64,
    #[serde(default)]
    pub carrier_cm: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

fn one() -> f64 {
    1.0
}

/// Turns declarations into a validated sequence. `levels_of(q)` lists the
/// level labels of qubit `q`, `None` if the qubit does not exist.
pub fn build_sequence<'a, F>(decls: &[PulseDecl], default_width: f64, levels_of: F) -> Result<PulseSequence>
where
    F: Fn(usize) -> Option<Vec<&'a str>>,
{
    let mut numbered = Vec::with_capacity(decls.len());
    for (i, d) in decls.iter().enumerate() {
        let number = d.number.unwrap_or(i as u32 + 1);
        let levels = levels_of(d.qubit)
            .ok_or_else(|| validation(format!("pulse {number}: unknown qubit {}", d.qubit)))?;
        for lvl in [&d.from, &d.to] {
            if !levels.contains(&lvl.as_str()) {
                return Err(validation(format!("pulse {number}: qubit {} has no level `{lvl}`", d.qubit)));
            }
        }
        let width = d.spectral_width.unwrap_or(default_width);
        let area = d.area_pi * PI;
        numbered.push(NumberedPulse {
            number,
            pulse: PulseSpec {
                carrier_cm: d.carrier_cm,
                spectral_width: width,
                rabi_frequency: d.rabi_frequency.unwrap_or(area * width),
                pulse_area: area,
                phase: d.phase_pi * PI,
                envelope: d.envelope,
                target: TransitionTarget { qubit: d.qubit, from: d.from.clone(), to: d.to.clone() },
                detuning: d.detuning,
            },
        });
    }
    PulseSequence::from_numbered(numbered)
}

impl PulseSequence {
    /// The declarative form of this sequence; `build_sequence` accepts it back.
    pub fn to_decls(&self) -> Vec<PulseDecl> {
        self.pulses
            .iter()
            .map(|p| PulseDecl {
                number: Some(p.number),
                qubit: p.pulse.target.qubit,
                from: p.pulse.target.from.clone(),
                to: p.pulse.target.to.clone(),
                area_pi: p.pulse.pulse_area / PI,
                spectral_width: Some(p.pulse.spectral_width),
                rabi_frequency: Some(p.pulse.rabi_frequency),
                detuning: p.pulse.detuning,
                phase_pi: p.pulse.phase / PI,
                carrier_cm: p.pulse.carrier_cm,
                envelope: p.pulse.envelope,
            })
            .collect()
    }
}
