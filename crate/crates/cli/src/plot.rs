// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Long-format (x, y, series) plot series from run outputs.

use std::path::Path;

use fastoqc_core::ensemble::{self, LineShape};
use fastoqc_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::output::{read_table, read_trajectory};
use crate::runner::{CenterRow, EnsembleSummary, SweepTableRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    FidelityVsShift,
    PopulationVsTime,
    Spectrum,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fidelity-vs-shift" => Ok(PlotKind::FidelityVsShift),
            "population-vs-time" => Ok(PlotKind::PopulationVsTime),
            "spectrum" => Ok(PlotKind::Spectrum),
            other => Err(Error::Config(format!(
                "unknown plot kind `{other}` (expected fidelity-vs-shift, population-vs-time, spectrum)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub x: f64,
    pub y: f64,
    pub series: String,
}

pub const SPECTRUM_BINS: usize = 64;

pub fn plot_series(dir: &Path, kind: PlotKind) -> Result<Vec<PlotRow>> {
    match kind {
        PlotKind::FidelityVsShift => {
            let rows: Vec<SweepTableRow> = read_table(dir, "sweep")?.unwrap_or_default();
            Ok(rows
                .iter()
                .filter_map(|r| Some(PlotRow { x: r.shift_over_rabi?, y: r.infidelity?, series: "infidelity".into() }))
                .collect())
        }
        PlotKind::PopulationVsTime => {
            let Some(t) = read_trajectory(dir, "trajectory")? else {
                return Ok(Vec::new());
            };
            let mut out = Vec::new();
            for (k, name) in t.header.iter().enumerate().skip(1) {
                if let Some(label) = name.strip_prefix("p[").and_then(|n| n.strip_suffix(']')) {
                    out.extend(t.rows.iter().map(|r| PlotRow { x: r[0], y: r[k], series: label.to_string() }));
                }
            }
            Ok(out)
        }
        PlotKind::Spectrum => {
            let centers: Vec<CenterRow> = read_table(dir, "centers")?.unwrap_or_default();
            if centers.is_empty() {
                return Ok(Vec::new());
            }
            let summary: Option<EnsembleSummary> = match std::fs::read(dir.join("ensemble.json")) {
                Ok(b) => Some(serde_json::from_slice(&b).map_err(|e| Error::Config(format!("ensemble.json: {e}")))?),
                Err(_) => None,
            };
            let freqs: Vec<f64> = centers.iter().map(|c| c.frequency_hz).collect();
            Ok(spectrum(&freqs, summary.as_ref()))
        }
    }
}

/// Histogram over ±2·FWHM plus a `fwhm_estimate` row (x = estimated FWHM,
/// y = nominal Γ_inh when known, else the estimate).
pub fn spectrum(freqs: &[f64], summary: Option<&EnsembleSummary>) -> Vec<PlotRow> {
    let shape = LineShape::Gaussian;
    let fwhm = ensemble::sample_fwhm(freqs, shape).unwrap_or(0.0);
    let span = if fwhm > 0.0 { 4.0 * fwhm } else { 1.0 };
    let lo = -span / 2.0;
    let width = span / SPECTRUM_BINS as f64;
    let mut counts = vec![0usize; SPECTRUM_BINS];
    for &f in freqs {
        let k = ((f - lo) / width).floor();
        if k >= 0.0 && (k as usize) < SPECTRUM_BINS {
            counts[k as usize] += 1;
        }
    }
    let mut rows: Vec<PlotRow> = counts
        .iter()
        .enumerate()
        .map(|(k, &n)| PlotRow { x: lo + (k as f64 + 0.5) * width, y: n as f64, series: "counts".into() })
        .collect();
    let nominal = summary.map_or(fwhm, |s| s.inhomogeneous_width);
    rows.push(PlotRow { x: fwhm, y: nominal, series: "fwhm_estimate".into() });
    rows
}

/// CSV text; header only for an empty series.
pub fn to_csv(rows: &[PlotRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["x", "y", "series"]).map_err(|e| Error::Numerical(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Numerical(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Numerical(e.to_string()))
}
