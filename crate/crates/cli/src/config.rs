// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration schema.
//!
//! A config is one TOML file with optional sections `species`, `pulses`,
//! `crystal`, `interactions`, `gate`, `sweep` and `output`, plus a top-level
//! `seed` that is mandatory once a stochastic section (`crystal`) is present.

use std::path::{Path, PathBuf};

use fastoqc_core::ensemble::LineShape;
use fastoqc_core::gates::{GateKind, Noise, PairQubitParams};
use fastoqc_core::paircenter::PairMode;
use fastoqc_core::pulses::{PulseDecl, WaveNumberConvention};
use fastoqc_core::{BlockadeModel, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub species: Option<SpeciesSection>,
    #[serde(default)]
    pub pulses: Option<PulsesSection>,
    #[serde(default)]
    pub crystal: Option<CrystalSection>,
    #[serde(default)]
    pub interactions: Option<BlockadeModel>,
    #[serde(default)]
    pub gate: Option<GateSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub name: String,
    #[serde(default)]
    pub host: Option<String>,
    #[serde(default)]
    pub variant: Option<String>,
    /// Extra species data file, relative to the config.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// |U⁽²⁾|² threshold for the auxiliary-level check.
    #[serde(default)]
    pub u2_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsesSection {
    /// Carrier, cm⁻¹.
    #[serde(default)]
    pub carrier_cm: Option<f64>,
    /// Radiative lifetime 1/γ₀ of the driven transition, s.
    #[serde(default)]
    pub lifetime_s: Option<f64>,
    /// Γ_L, 1/s. Also the default width of sequence pulses.
    #[serde(default)]
    pub spectral_width: Option<f64>,
    /// Beam cross-section S, cm².
    #[serde(default)]
    pub cross_section_cm2: Option<f64>,
    #[serde(default = "one")]
    pub refractive_index: f64,
    #[serde(default)]
    pub convention: WaveNumberConvention,
    /// Intensities (W/cm²) for the peak-field table.
    #[serde(default)]
    pub field_intensities: Vec<f64>,
    /// Explicit gate sequence; replaces the canonical one.
    #[serde(default)]
    pub sequence: Vec<PulseDecl>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    #[serde(default = "lattice_constant")]
    pub lattice_constant_nm: f64,
    pub concentration: f64,
    pub inhomogeneous_width: f64,
    pub homogeneous_width: f64,
    pub box_size: u32,
    #[serde(default)]
    pub distribution: LineShape,
    /// Γ_L of the addressing laser, 1/s.
    pub laser_width: f64,
    /// Line-centre offset of the addressed window, Hz.
    #[serde(default)]
    pub window_center: f64,
    #[serde(default = "ensemble_size")]
    pub ensemble_size: u32,
    #[serde(default = "instances")]
    pub instances: usize,
    /// |U⁽²⁾|² for the blockade estimate; defaults to the species' auxiliary level.
    #[serde(default)]
    pub u2: Option<f64>,
    #[serde(default = "pair_radius")]
    pub pair_radius: f64,
    #[serde(default)]
    pub pair_fraction: Option<f64>,
    /// Minimum channel separation, Hz; defaults to the laser width.
    #[serde(default)]
    pub channel_gap: Option<f64>,
}

fn lattice_constant() -> f64 {
    0.546
}
fn ensemble_size() -> u32 {
    50
}
fn instances() -> usize {
    16
}
fn pair_radius() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GateModel {
    /// Lossless three-level qubits.
    #[default]
    Ideal,
    /// Levels and lifetimes from the `species` section.
    Species,
    PairCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRequest {
    /// Initial basis state, one level label per qubit.
    pub input: Vec<String>,
    #[serde(default = "samples")]
    pub samples: usize,
}

fn samples() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    #[serde(default)]
    pub model: GateModel,
    #[serde(default)]
    pub kind: GateKind,
    /// Ω, rad/s. Defaults to π·Γ_L from `pulses.spectral_width`.
    #[serde(default)]
    pub rabi_frequency: Option<f64>,
    /// δ of |1'1'⟩ in Hz; alternatives: `shift_over_rabi` or `distance`.
    #[serde(default)]
    pub shift_hz: Option<f64>,
    /// δ/Ω with δ taken as angular.
    #[serde(default)]
    pub shift_over_rabi: Option<f64>,
    /// Centre separation in lattice units; δ from the `interactions` model.
    #[serde(default)]
    pub distance: Option<f64>,
    /// Γ_h, 1/s.
    #[serde(default)]
    pub dephasing: f64,
    #[serde(default = "no_noise")]
    pub noise: Noise,
    #[serde(default = "first")]
    pub control: usize,
    #[serde(default = "exact")]
    pub pair_mode: PairMode,
    #[serde(default)]
    pub pair_a: Option<PairQubitParams>,
    #[serde(default)]
    pub pair_b: Option<PairQubitParams>,
    #[serde(default)]
    pub trajectory: Option<TrajectoryRequest>,
}

fn no_noise() -> Noise {
    Noise::NONE
}
fn first() -> usize {
    0
}
fn exact() -> PairMode {
    PairMode::Exact
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: String,
    #[serde(default)]
    pub values: Vec<f64>,
    /// Alternative to `values`: `points` samples from `from` to `to`.
    #[serde(default)]
    pub from: Option<f64>,
    #[serde(default)]
    pub to: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<AxisSpec>,
    /// Reuse successful rows from an existing sweep table in the output dir.
    #[serde(default)]
    pub resume: bool,
}

pub const SWEEP_PARAMETERS: [&str; 6] = ["shift_over_rabi", "shift_hz", "rabi_frequency", "dephasing", "eps_over_delta", "distance"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        if cfg.species.is_none()
            && cfg.pulses.is_none()
            && cfg.crystal.is_none()
            && cfg.interactions.is_none()
            && cfg.gate.is_none()
            && cfg.sweep.is_none()
        {
            return Err(Error::Config("config defines no sections".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let cfg = Self::parse(text).map_err(|e| e.context(path.display().to_string()))?;
        Ok((cfg, bytes))
    }
}

/// TOML errors span several lines; diagnostics must fit one.
pub fn one_line(s: &str) -> String {
    s.split('\n').map(str::trim).filter(|l| !l.is_empty() && !l.chars().all(|c| c == '|' || c == '^' || c == ' ')).collect::<Vec<_>>().join(" ")
}

impl AxisSpec {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        if !SWEEP_PARAMETERS.contains(&self.name.as_str()) {
            return Err(Error::Validation(format!(
                "unknown sweep parameter `{}` (expected one of {})",
                self.name,
                SWEEP_PARAMETERS.join(", ")
            )));
        }
        match (self.values.is_empty(), self.from, self.to, self.points) {
            (false, None, None, None) => Ok(self.values.clone()),
            (true, Some(a), Some(b), Some(n)) if n >= 1 => {
                if n == 1 {
                    return Ok(vec![a]);
                }
                if self.log && !(a > 0.0 && b > 0.0) {
                    return Err(Error::Validation(format!("log axis `{}` needs positive bounds", self.name)));
                }
                Ok((0..n)
                    .map(|k| {
                        let t = k as f64 / (n - 1) as f64;
                        if self.log {
                            a * (b / a).powf(t)
                        } else {
                            a + (b - a) * t
                        }
                    })
                    .collect())
            }
            _ => Err(Error::Validation(format!("sweep axis `{}`: give either `values` or `from`/`to`/`points`", self.name))),
        }
    }
}
