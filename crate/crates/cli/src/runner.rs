// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Config validation and execution.
//!
//! [`prepare`] performs every check `run` relies on (schema, references,
//! physical preconditions) and resolves the sections into ready-to-run
//! objects; [`execute`] runs them in dependency order and writes outputs.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fastoqc_core::dynamics::{self, TrajectoryTable};
use fastoqc_core::ensemble::{self, EnsembleBlockade};
use fastoqc_core::gates::{self, GateReport, GateScenario, SweepAxis, SweepPoint, SweepRow};
use fastoqc_core::pulses::{self, BeamGeometry, EmitterRadiative, PulseBudget};
use fastoqc_core::species::{self, Role, ValidationReport, DEFAULT_U2_THRESHOLD};
use fastoqc_core::{BlockadeModel, CrystalSpec, Error, Result, SpeciesRegistry, SpeciesScheme};
use serde::{Deserialize, Serialize};

use crate::config::{CrystalSection, GateModel, GateSection, OutputFormat, PulsesSection, ScenarioConfig};
use crate::output::{read_table, sha256_hex, OutputWriter, RunManifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A validated config, ready to execute.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ScenarioConfig,
    pub config_label: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub scheme: Option<SpeciesScheme>,
    pub species_report: Option<ValidationReport>,
    pub model: BlockadeModel,
    pub crystal: Option<CrystalSpec>,
    pub gate: Option<GateScenario>,
    pub sweep_points: Option<Vec<SweepPoint>>,
    pub warnings: Vec<String>,
}

fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub fn load_plan(path: &Path, seed_override: Option<u64>) -> Result<Plan> {
    let (cfg, bytes) = ScenarioConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    prepare(cfg, base, &path.display().to_string(), &bytes, seed_override)
}

pub fn prepare(cfg: ScenarioConfig, base_dir: &Path, label: &str, raw: &[u8], seed_override: Option<u64>) -> Result<Plan> {
    let seed = seed_override.or(cfg.seed);
    let mut warnings = Vec::new();

    let (scheme, species_report) = match &cfg.species {
        Some(s) => {
            let registry = match &s.data {
                Some(p) => {
                    let path = base_dir.join(p);
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    species::load_registry(&text).map_err(|e| e.context(path.display().to_string()))?
                }
                None => SpeciesRegistry::builtin(),
            };
            let mut scheme = registry.get(&s.name, s.host.as_deref()).map_err(|e| e.context("[species]"))?.clone();
            if let Some(v) = &s.variant {
                scheme = scheme.with_variant(v).map_err(|e| e.context("[species]"))?;
            }
            let report = species::validate_scheme(&scheme, s.u2_threshold.unwrap_or(DEFAULT_U2_THRESHOLD));
            if !report.passed {
                let msg = report.failures().map(|d| d.message.clone()).collect::<Vec<_>>().join("; ");
                return Err(validation(format!("[species] {}: {msg}", scheme.name)));
            }
            warnings.extend(report.warnings().map(|d| format!("{} {}: {}", scheme.name, d.term, d.message)));
            (Some(scheme), Some(report))
        }
        None => (None, None),
    };

    let model = cfg.interactions.unwrap_or_default();
    model.check().map_err(|e| e.context("[interactions]"))?;

    if let Some(p) = &cfg.pulses {
        check_pulses(p)?;
    }

    let crystal = match &cfg.crystal {
        Some(c) => {
            if seed.is_none() {
                return Err(Error::Config("[crystal] is stochastic: a top-level `seed` (or --seed) is required".into()));
            }
            let spec = crystal_spec(c);
            spec.check().map_err(|e| e.context("[crystal]"))?;
            check_crystal_extras(c, scheme.as_ref())?;
            warnings.extend(spec.statistics_warning());
            Some(spec)
        }
        None => None,
    };

    let gate = match &cfg.gate {
        Some(g) => Some(build_gate(&cfg, g, scheme.as_ref(), &model, None).map_err(|e| e.context("[gate]"))?),
        None => None,
    };

    let sweep_points = match &cfg.sweep {
        Some(s) => {
            let g = cfg.gate.as_ref().ok_or_else(|| validation("[sweep] needs a [gate] section as template"))?;
            let axes = s
                .axes
                .iter()
                .map(|a| Ok(SweepAxis { name: a.name.clone(), values: a.resolve()? }))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.context("[sweep]"))?;
            let points = gates::grid(&axes).map_err(|e| e.context("[sweep]"))?;
            // Only structural problems are fatal here; per-point physics errors are recorded.
            for a in &axes {
                if a.name == "eps_over_delta" && g.model != GateModel::PairCenter {
                    return Err(validation("[sweep] eps_over_delta needs gate.model = \"pair_center\""));
                }
            }
            Some(points)
        }
        None => None,
    };

    Ok(Plan {
        config_sha256: sha256_hex(raw),
        config_label: label.to_string(),
        config: cfg,
        seed,
        scheme,
        species_report,
        model,
        crystal,
        gate,
        sweep_points,
        warnings,
    })
}

fn check_pulses(p: &PulsesSection) -> Result<()> {
    let calc = [p.carrier_cm.is_some(), p.lifetime_s.is_some(), p.cross_section_cm2.is_some()];
    if calc.iter().any(|&b| b) && !calc.iter().all(|&b| b) {
        return Err(validation("[pulses] the pulse calculator needs carrier_cm, lifetime_s and cross_section_cm2 together"));
    }
    if calc[0] && p.spectral_width.is_none() {
        return Err(validation("[pulses] the pulse calculator needs spectral_width"));
    }
    if calc[0] {
        pulse_budget(p)?;
    }
    for &i in &p.field_intensities {
        pulses::peak_field(i).map_err(|e| e.context("[pulses] field_intensities"))?;
    }
    Ok(())
}

fn pulse_budget(p: &PulsesSection) -> Result<Option<PulseBudget>> {
    let (Some(carrier), Some(tau), Some(s), Some(w)) = (p.carrier_cm, p.lifetime_s, p.cross_section_cm2, p.spectral_width) else {
        return Ok(None);
    };
    let b = pulses::pulse_budget(carrier, EmitterRadiative::new(tau)?, w, BeamGeometry::new(s, p.refractive_index)?, p.convention)
        .map_err(|e| e.context("[pulses]"))?;
    Ok(Some(b))
}

fn crystal_spec(c: &CrystalSection) -> CrystalSpec {
    CrystalSpec {
        lattice_constant_nm: c.lattice_constant_nm,
        concentration: c.concentration,
        inhomogeneous_width: c.inhomogeneous_width,
        homogeneous_width: c.homogeneous_width,
        box_size: c.box_size,
        distribution: c.distribution,
    }
}

fn check_crystal_extras(c: &CrystalSection, scheme: Option<&SpeciesScheme>) -> Result<()> {
    if !(c.laser_width > 0.0) {
        return Err(Error::Domain("[crystal] laser_width must be > 0".into()));
    }
    if !(c.pair_radius > 0.0) {
        return Err(Error::Domain("[crystal] pair_radius must be > 0".into()));
    }
    if c.ensemble_size < 1 {
        return Err(Error::Domain("[crystal] ensemble_size must be >= 1".into()));
    }
    if let Some(f) = c.pair_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(validation("[crystal] pair_fraction must be in [0, 1]"));
        }
    }
    if let Some(g) = c.channel_gap {
        if !(g >= 0.0) {
            return Err(Error::Domain("[crystal] channel_gap must be >= 0".into()));
        }
    }
    ensemble_u2(c, scheme)?;
    Ok(())
}

fn ensemble_u2(c: &CrystalSection, scheme: Option<&SpeciesScheme>) -> Result<f64> {
    if let Some(u) = c.u2 {
        if !(u >= 0.0) {
            return Err(Error::Domain("[crystal] u2 must be >= 0".into()));
        }
        return Ok(u);
    }
    scheme
        .and_then(|s| s.level_with_role(Role::Auxiliary))
        .and_then(|l| l.u2_diag_sq)
        .ok_or_else(|| validation("[crystal] set `u2`: the species has no auxiliary level with a tabulated |U(2)|^2"))
}

/// Ω for a gate section: explicit, or π·Γ_L from `[pulses]`.
pub fn gate_rabi(cfg: &ScenarioConfig, g: &GateSection) -> Result<f64> {
    let r = g
        .rabi_frequency
        .or_else(|| cfg.pulses.as_ref().and_then(|p| p.spectral_width).map(|w| PI * w))
        .ok_or_else(|| validation("rabi_frequency missing (and no pulses.spectral_width to default from)"))?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain("rabi_frequency must be > 0".into()));
    }
    Ok(r)
}

fn apply_point(g: &GateSection, point: &SweepPoint) -> GateSection {
    let mut g = g.clone();
    for (name, v) in &point.values {
        match name.as_str() {
            "shift_over_rabi" => {
                g.shift_over_rabi = Some(*v);
                g.shift_hz = None;
                g.distance = None;
            }
            "shift_hz" => {
                g.shift_hz = Some(*v);
                g.shift_over_rabi = None;
                g.distance = None;
            }
            "distance" => {
                g.distance = Some(*v);
                g.shift_hz = None;
                g.shift_over_rabi = None;
            }
            "rabi_frequency" => g.rabi_frequency = Some(*v),
            "dephasing" => g.dephasing = *v,
            "eps_over_delta" => {
                for p in [&mut g.pair_a, &mut g.pair_b].into_iter().flatten() {
                    p.pair.half_detuning = v * p.pair.exchange;
                }
            }
            _ => {}
        }
    }
    g
}

fn shift_hz(g: &GateSection, rabi: f64, scheme: Option<&SpeciesScheme>, model: &BlockadeModel) -> Result<f64> {
    let given = [g.shift_hz.is_some(), g.shift_over_rabi.is_some(), g.distance.is_some()].iter().filter(|&&b| b).count();
    if given != 1 {
        return Err(validation("give exactly one of shift_hz, shift_over_rabi, distance"));
    }
    let hz = if let Some(h) = g.shift_hz {
        h
    } else if let Some(x) = g.shift_over_rabi {
        x * rabi / (2.0 * PI)
    } else {
        let r = g.distance.unwrap();
        let u2 = scheme
            .and_then(|s| s.level_with_role(Role::Auxiliary))
            .and_then(|l| l.u2_diag_sq)
            .ok_or_else(|| validation("distance-derived shifts need a species auxiliary level with |U(2)|^2"))?;
        model.quadrupole_shift(u2, u2, r)?
    };
    if !(hz >= 0.0 && hz.is_finite()) {
        return Err(Error::Domain(format!("blockade shift must be finite and >= 0, got {hz}")));
    }
    Ok(hz)
}

/// Builds the gate scenario, with sweep-point overrides when given.
pub fn build_gate(
    cfg: &ScenarioConfig,
    g: &GateSection,
    scheme: Option<&SpeciesScheme>,
    model: &BlockadeModel,
    point: Option<&SweepPoint>,
) -> Result<GateScenario> {
    let g = match point {
        Some(p) => apply_point(g, p),
        None => g.clone(),
    };
    if g.control > 1 {
        return Err(validation("control must be 0 or 1"));
    }
    if !(g.dephasing >= 0.0) {
        return Err(Error::Domain("dephasing must be >= 0".into()));
    }
    let rabi = gate_rabi(cfg, &g)?;
    let mut scenario = match g.model {
        GateModel::Ideal => gates::ideal_scenario(2.0 * PI * shift_hz(&g, rabi, None, model)?, rabi, g.dephasing, g.kind)?,
        GateModel::Species => {
            let s = scheme.ok_or_else(|| validation("model = \"species\" needs a [species] section"))?;
            gates::rei_scenario(s, s, shift_hz(&g, rabi, Some(s), model)?, rabi, g.dephasing, g.noise, g.kind)?
        }
        GateModel::PairCenter => {
            let a = g.pair_a.ok_or_else(|| validation("model = \"pair_center\" needs pair_a"))?;
            let b = g.pair_b.unwrap_or(a);
            let r = g.distance.ok_or_else(|| validation("model = \"pair_center\" needs distance"))?;
            gates::pair_center_scenario(&a, &b, r, model, g.pair_mode, rabi, g.dephasing, g.noise, g.kind)?
        }
    };
    scenario.noise = g.noise;
    let (control, target) = (g.control, 1 - g.control);
    let sequence = match cfg.pulses.as_ref().filter(|p| !p.sequence.is_empty()) {
        Some(p) => {
            let width = p.spectral_width.unwrap_or(rabi / PI);
            let sys = &scenario.system;
            pulses::build_sequence(&p.sequence, width, |q| sys.level_labels(q)).map_err(|e| e.context("[pulses] sequence"))?
        }
        None => gates::canonical_blockade_sequence(&scenario.system, control, target, rabi, g.kind)?,
    };
    scenario.control = control;
    scenario.target = target;
    scenario.sequence = sequence;
    scenario.check()?;
    Ok(scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesOutput<'a> {
    pub scheme: &'a SpeciesScheme,
    pub validation: &'a ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRow {
    pub intensity_w_cm2: f64,
    pub peak_field_v_cm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseOutput {
    pub carrier_cm: Option<f64>,
    pub spectral_width: Option<f64>,
    pub cross_section_cm2: Option<f64>,
    pub calibration: f64,
    pub budget: Option<PulseBudget>,
    pub field_table: Vec<FieldRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterRow {
    pub index: usize,
    pub x: i32,
    pub y: i32,
    pub z: i32,
    pub frequency_hz: f64,
    pub pair_member: bool,
    pub partner: Option<usize>,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRow {
    pub channel: usize,
    pub center: usize,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub seed: u64,
    pub box_size: u32,
    pub sites: u64,
    pub occupied: usize,
    pub concentration: f64,
    pub sampled_concentration: f64,
    pub inhomogeneous_width: f64,
    pub fwhm_estimate_hz: Option<f64>,
    pub laser_width: f64,
    pub selected: usize,
    /// c·(peak density)·Γ_L/Γ_inh
    pub effective_concentration: f64,
    /// R₀ = (c·Γ_L/Γ_inh)^(-1/3), lattice units.
    pub mean_qubit_spacing: f64,
    pub mc_median_same_frequency_spacing: Option<f64>,
    pub spacing_ratio: Option<f64>,
    pub ensemble_size: u32,
    /// (N/c)^(1/3), lattice units.
    pub ensemble_radius: f64,
    /// (a/R₀)³ at the computed R₀.
    pub min_pair_concentration: f64,
    pub pair_radius: f64,
    pub pairs: usize,
    pub pair_fraction: f64,
    pub u2: f64,
    pub c_qq: f64,
    pub blockade_margin: f64,
    pub blockade: EnsembleBlockadeOut,
    pub feasible: bool,
    pub channel_gap_hz: f64,
    /// Addressable channels among the first ensemble's N + 1 centres.
    pub channels: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleBlockadeOut {
    pub instances: usize,
    pub mc_radius: f64,
    pub formula_radius: f64,
    pub median_nn_distance: f64,
    pub median_shift_hz: f64,
    pub min_shift_hz: f64,
    pub feasible_fraction: f64,
    pub median_margin: f64,
}

impl From<&EnsembleBlockade> for EnsembleBlockadeOut {
    fn from(b: &EnsembleBlockade) -> Self {
        Self {
            instances: b.instances,
            mc_radius: b.mc_radius,
            formula_radius: b.formula_radius,
            median_nn_distance: b.median_nn_distance,
            median_shift_hz: b.median_shift,
            min_shift_hz: b.min_shift,
            feasible_fraction: b.feasible_fraction,
            median_margin: b.median_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateSummary {
    pub label: String,
    pub model: GateModel,
    pub dimension: usize,
    pub rabi_frequency: f64,
    pub aux_shift_hz: f64,
    pub zero_shift_hz: f64,
    pub shift_over_rabi: f64,
    pub pulses: usize,
    pub report: GateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTableRow {
    pub index: usize,
    pub parameters: String,
    pub shift_over_rabi: Option<f64>,
    pub truth_table_fidelity: Option<f64>,
    pub average_fidelity: Option<f64>,
    pub infidelity: Option<f64>,
    pub leakage: Option<f64>,
    pub entangling_phase: Option<f64>,
    pub duration_s: Option<f64>,
    pub error: Option<String>,
}

fn parameter_string(values: &[(String, f64)]) -> String {
    values.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub ensemble: Option<EnsembleSummary>,
    pub gate: Option<GateReport>,
    pub sweep: Option<Vec<SweepTableRow>>,
    pub warnings: Vec<String>,
}

/// Runs every section in dependency order: species, pulses, ensemble,
/// gate, sweep. Writes outputs and the manifest.
pub fn execute(plan: &Plan, opts: &RunOptions) -> Result<RunResult> {
    let started = Instant::now();
    let mut out = OutputWriter::create(&opts.out_dir, opts.format)?;
    let mut warnings = plan.warnings.clone();
    let cfg = &plan.config;

    if let (Some(scheme), Some(report)) = (&plan.scheme, &plan.species_report) {
        out.json("species.json", &SpeciesOutput { scheme, validation: report })?;
    }

    if let Some(p) = &cfg.pulses {
        if p.carrier_cm.is_some() || !p.field_intensities.is_empty() {
            let field_table = p
                .field_intensities
                .iter()
                .map(|&i| Ok(FieldRow { intensity_w_cm2: i, peak_field_v_cm: pulses::peak_field(i)? }))
                .collect::<Result<Vec<_>>>()?;
            out.json(
                "pulse.json",
                &PulseOutput {
                    carrier_cm: p.carrier_cm,
                    spectral_width: p.spectral_width,
                    cross_section_cm2: p.cross_section_cm2,
                    calibration: pulses::INTENSITY_CALIBRATION,
                    budget: pulse_budget(p)?,
                    field_table,
                },
            )?;
        }
    }

    let ensemble = match (&plan.crystal, &cfg.crystal) {
        (Some(spec), Some(section)) => {
            let seed = plan.seed.expect("checked in prepare");
            let (summary, centers, channels) = run_ensemble(spec, section, plan, seed)?;
            warnings.extend(summary.warnings.iter().cloned());
            out.json("ensemble.json", &summary)?;
            out.table("centers", &centers)?;
            out.table("channels", &channels)?;
            Some(summary)
        }
        _ => None,
    };

    let gate = match (&plan.gate, &cfg.gate) {
        (Some(scenario), Some(section)) => {
            let report = gates::run_protocol(scenario)?;
            let rabi = gate_rabi(cfg, section)?;
            out.json(
                "gate.json",
                &GateSummary {
                    label: scenario.label.clone(),
                    model: section.model,
                    dimension: scenario.system.dimension(),
                    rabi_frequency: rabi,
                    aux_shift_hz: scenario.coupling.aux_shift_hz,
                    zero_shift_hz: scenario.coupling.zero_shift_hz,
                    shift_over_rabi: 2.0 * PI * scenario.coupling.aux_shift_hz / rabi,
                    pulses: scenario.sequence.len(),
                    report: report.clone(),
                },
            )?;
            if let Some(t) = &section.trajectory {
                out.trajectory("trajectory", &trajectory(scenario, &t.input, t.samples)?)?;
            }
            Some(report)
        }
        _ => None,
    };

    let sweep = match (&plan.sweep_points, &cfg.gate) {
        (Some(points), Some(section)) => {
            let resume = cfg.sweep.as_ref().is_some_and(|s| s.resume);
            let rows = run_sweep(plan, section, points, resume.then_some(opts.out_dir.as_path()))?;
            out.table("sweep", &rows)?;
            Some(rows)
        }
        _ => None,
    };

    let files = out.entries().iter().map(|e| e.file.clone()).collect();
    out.finish(RunManifest {
        tool: "fastoqc".into(),
        version: VERSION.into(),
        config: plan.config_label.clone(),
        config_sha256: plan.config_sha256.clone(),
        seed: plan.seed,
        format: opts.format,
        wall_clock_s: started.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    })?;
    Ok(RunResult { out_dir: opts.out_dir.clone(), files, ensemble, gate, sweep, warnings })
}

fn trajectory(scenario: &GateScenario, input: &[String], samples: usize) -> Result<TrajectoryTable> {
    let system = scenario.effective_system()?;
    let labels: Vec<&str> = input.iter().map(String::as_str).collect();
    let psi = system.basis_state(&labels).map_err(|e| e.context("gate.trajectory.input"))?;
    if system.is_closed() {
        let tr = dynamics::propagate_unitary(&system, &scenario.sequence, &psi, samples)?;
        Ok(dynamics::trajectory_table_state(&system, &tr))
    } else {
        let tr = dynamics::propagate_lindblad(&system, &scenario.sequence, &dynamics::pure_density(&psi), samples)?;
        Ok(dynamics::trajectory_table_density(&system, &tr))
    }
}

type EnsembleOutputs = (EnsembleSummary, Vec<CenterRow>, Vec<ChannelRow>);

fn run_ensemble(spec: &CrystalSpec, c: &CrystalSection, plan: &Plan, seed: u64) -> Result<EnsembleOutputs> {
    let mut centers = ensemble::sample_lattice(spec, seed)?;
    ensemble::assign_frequencies(&mut centers, spec, seed)?;
    ensemble::identify_pairs(&mut centers, c.pair_radius, spec.box_size);
    if let Some(f) = c.pair_fraction {
        ensemble::retain_pair_fraction(&mut centers, f, seed)?;
    }
    let mut warnings = Vec::new();
    let selected = ensemble::spectral_select(&centers, c.window_center, c.laser_width);
    let positions: Vec<[i32; 3]> = selected.iter().map(|&i| centers[i].position).collect();
    let mc_spacing = (positions.len() >= 2)
        .then(|| ensemble::median(&ensemble::nearest_neighbour_distances(&positions, spec.box_size)))
        .flatten();
    if positions.len() < 2 {
        warnings.push(format!("spectral window holds {} centres; no same-frequency spacing estimate", positions.len()));
    }
    let r0 = ensemble::mean_qubit_spacing(spec.concentration, c.laser_width, spec.inhomogeneous_width)?;
    let u2 = ensemble_u2(c, plan.scheme.as_ref())?;
    let blockade =
        ensemble::ensemble_blockade(&centers, spec, c.ensemble_size, c.instances, u2, &plan.model, c.laser_width)?;
    // Channels for the first N-centre ensemble: the reference and its N closest centres.
    let gap = c.channel_gap.unwrap_or(c.laser_width);
    let mut members = vec![0usize];
    members.extend(ensemble::closest_centers(&centers, 0, c.ensemble_size as usize, spec.box_size));
    let freqs: Vec<f64> = members.iter().map(|&i| centers[i].frequency).collect();
    let alloc = ensemble::allocate_channels(&freqs, gap)?;
    let channels = alloc
        .selected_indices
        .iter()
        .enumerate()
        .map(|(k, &j)| ChannelRow { channel: k, center: members[j], frequency_hz: freqs[j] })
        .collect();
    let mut is_selected = vec![false; centers.len()];
    for &i in &selected {
        is_selected[i] = true;
    }
    let rows = centers
        .iter()
        .enumerate()
        .map(|(i, ct)| CenterRow {
            index: i,
            x: ct.position[0],
            y: ct.position[1],
            z: ct.position[2],
            frequency_hz: ct.frequency,
            pair_member: ct.is_pair_member(),
            partner: ct.partner,
            selected: is_selected[i],
        })
        .collect();
    let freqs_all: Vec<f64> = centers.iter().map(|c| c.frequency).collect();
    let summary = EnsembleSummary {
        seed,
        box_size: spec.box_size,
        sites: spec.sites(),
        occupied: centers.len(),
        concentration: spec.concentration,
        sampled_concentration: centers.len() as f64 / spec.sites() as f64,
        inhomogeneous_width: spec.inhomogeneous_width,
        fwhm_estimate_hz: ensemble::sample_fwhm(&freqs_all, spec.distribution),
        laser_width: c.laser_width,
        selected: selected.len(),
        effective_concentration: spec.concentration * spec.distribution.peak_density_correction() * c.laser_width
            / spec.inhomogeneous_width,
        mean_qubit_spacing: r0,
        mc_median_same_frequency_spacing: mc_spacing,
        spacing_ratio: mc_spacing.map(|m| r0 / m),
        ensemble_size: c.ensemble_size,
        ensemble_radius: ensemble::ensemble_radius(c.ensemble_size, spec.concentration)?,
        min_pair_concentration: ensemble::min_pair_concentration(r0)?,
        pair_radius: c.pair_radius,
        pairs: centers.iter().filter(|c| c.is_pair_member()).count() / 2,
        pair_fraction: ensemble::pair_fraction(&centers),
        u2,
        c_qq: plan.model.c_qq,
        blockade_margin: plan.model.margin,
        feasible: blockade.median_feasible,
        blockade: (&blockade).into(),
        channel_gap_hz: gap,
        channels: alloc.selected_indices.len(),
        warnings,
    };
    Ok((summary, rows, channels))
}

fn sweep_row(plan: &Plan, section: &GateSection, row: &SweepRow, points: &[SweepPoint]) -> SweepTableRow {
    let point = &points[row.index];
    let rabi = gate_rabi(&plan.config, &apply_point(section, point)).ok();
    let r = row.report.as_ref();
    SweepTableRow {
        index: row.index,
        parameters: parameter_string(&row.values),
        shift_over_rabi: r.and_then(|r| rabi.map(|w| 2.0 * PI * r.aux_shift_hz / w)),
        truth_table_fidelity: r.map(|r| r.truth_table_fidelity),
        average_fidelity: r.map(|r| r.average_fidelity),
        infidelity: r.map(|r| 1.0 - r.average_fidelity),
        leakage: r.map(|r| r.leakage),
        entangling_phase: r.and_then(|r| r.entangling_phase),
        duration_s: r.map(|r| r.duration_s),
        error: row.error.clone(),
    }
}

fn run_sweep(plan: &Plan, section: &GateSection, points: &[SweepPoint], resume_from: Option<&Path>) -> Result<Vec<SweepTableRow>> {
    let previous: Vec<SweepTableRow> = match resume_from {
        Some(dir) => read_table(dir, "sweep")?.unwrap_or_default(),
        None => Vec::new(),
    };
    let reusable = |p: &SweepPoint| {
        previous.iter().find(|r| r.index == p.index && r.error.is_none() && r.parameters == parameter_string(&p.values))
    };
    let todo: Vec<SweepPoint> = points.iter().filter(|p| reusable(p).is_none()).cloned().collect();
    let build = |p: &SweepPoint| {
        build_gate(&plan.config, section, plan.scheme.as_ref(), &plan.model, Some(p)).map_err(|e| e.context(format!("point {}", p.index)))
    };
    let fresh = gates::sweep(&todo, build, &[]);
    let mut rows: Vec<SweepTableRow> = points
        .iter()
        .map(|p| match reusable(p) {
            Some(r) => r.clone(),
            None => {
                let row = fresh.iter().find(|r| r.index == p.index).expect("every pending point is swept");
                sweep_row(plan, section, row, points)
            }
        })
        .collect();
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

/// Default output directory: `FASTOQC_OUT_DIR`, then `out/<config stem>`.
pub fn default_out_dir(config: &Path) -> PathBuf {
    if let Some(d) = std::env::var_os(OUT_DIR_ENV) {
        return PathBuf::from(d).join(config.file_stem().unwrap_or_default());
    }
    PathBuf::from("out").join(config.file_stem().unwrap_or_default())
}

pub const OUT_DIR_ENV: &str = "FASTOQC_OUT_DIR";

/// Output directory precedence: flag, config, environment/default.
pub fn resolve_out_dir(flag: Option<&Path>, plan: &Plan, config_path: &Path) -> PathBuf {
    if let Some(f) = flag {
        return f.to_path_buf();
    }
    if let Some(d) = &plan.config.output.dir {
        return config_path.parent().unwrap_or(Path::new(".")).join(d);
    }
    default_out_dir(config_path)
}
