// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Dopant ensembles on a simple-cubic cation lattice.
//!
//! Covers Monte-Carlo site occupation, inhomogeneous line sampling, spectral
//! window selection, pair identification, frequency-channel allocation and
//! the closed-form spacing/size estimates. Positions are integer lattice
//! coordinates in a periodic box of `box_size`³ sites; all distances are in
//! lattice units.

use std::cmp::Ordering;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::interactions::BlockadeModel;

const POSITION_STREAM: u64 = 1;
const FREQUENCY_STREAM: u64 = 2;
const PAIR_STREAM: u64 = 3;

/// FWHM / σ for a gaussian.
const GAUSS_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
/// Φ(sqrt(2 ln 2)): the half-maximum points of a gaussian as quantiles.
const GAUSS_HALF_MAX_QUANTILE: f64 = 0.880_346_109_639_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    #[default]
    Gaussian,
    Lorentzian,
}

impl LineShape {
    /// Peak density times FWHM: the fraction of an ensemble falling in a
    /// narrow window Γ_L at line centre is this × Γ_L/Γ_inh.
    pub fn peak_density_correction(self) -> f64 {
        match self {
            LineShape::Gaussian => GAUSS_FWHM_PER_SIGMA / (2.0 * std::f64::consts::PI).sqrt(),
            LineShape::Lorentzian => 2.0 / std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSpec {
    /// Lattice constant a, nm. Only a unit of distance.
    #[serde(default = "default_lattice_constant")]
    pub lattice_constant_nm: f64,
    pub concentration: f64,
    /// Γ_inh, Hz (FWHM).
    pub inhomogeneous_width: f64,
    /// Γ_h, Hz.
    pub homogeneous_width: f64,
    /// Edge of the periodic box, lattice units.
    pub box_size: u32,
    #[serde(default)]
    pub distribution: LineShape,
}

fn default_lattice_constant() -> f64 {
    0.546
}

impl CrystalSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.concentration > 0.0 && self.concentration <= 1.0) {
            return Err(domain(format!("concentration must be in (0, 1], got {}", self.concentration)));
        }
        if !(self.homogeneous_width > 0.0) {
            return Err(domain("homogeneous width must be > 0"));
        }
        if !(self.inhomogeneous_width > self.homogeneous_width) {
            return Err(domain(format!(
                "inhomogeneous width {} must exceed homogeneous width {}",
                self.inhomogeneous_width, self.homogeneous_width
            )));
        }
        if self.box_size < 1 {
            return Err(domain("box size must be >= 1"));
        }
        if !(self.lattice_constant_nm > 0.0) {
            return Err(domain("lattice constant must be > 0"));
        }
        Ok(())
    }

    pub fn sites(&self) -> u64 {
        u64::from(self.box_size).pow(3)
    }

    /// Warning text when the box holds too few expected centres for stable statistics.
    pub fn statistics_warning(&self) -> Option<String> {
        let expected = self.concentration * self.sites() as f64;
        (expected < 30.0).then(|| {
            format!("box of {}^3 sites holds only ~{expected:.1} centres; statistics will be poor", self.box_size)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopedCenter {
    pub position: [i32; 3],
    /// Offset from line centre, Hz.
    pub frequency: f64,
    pub partner: Option<usize>,
}

impl DopedCenter {
    pub fn is_pair_member(&self) -> bool {
        self.partner.is_some()
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Occupies each site independently with probability c.
pub fn sample_lattice(spec: &CrystalSpec, seed: u64) -> Result<Vec<DopedCenter>> {
    if !(spec.concentration >= 0.0 && spec.concentration <= 1.0) {
        return Err(domain("concentration must be in [0, 1]"));
    }
    let l = spec.box_size as i32;
    let c = spec.concentration;
    let mut r = rng(seed, POSITION_STREAM);
    let mut out = Vec::with_capacity((c * spec.sites() as f64 * 1.1) as usize + 8);
    for x in 0..l {
        for y in 0..l {
            for z in 0..l {
                if r.random::<f64>() < c {
                    out.push(DopedCenter { position: [x, y, z], frequency: 0.0, partner: None });
                }
            }
        }
    }
    Ok(out)
}

/// Draws `n` i.i.d. offsets with the given FWHM.
pub fn sample_line(n: usize, shape: LineShape, fwhm: f64, seed: u64) -> Result<Vec<f64>> {
    if !(fwhm >= 0.0 && fwhm.is_finite()) {
        return Err(domain("line width must be finite and >= 0"));
    }
    if fwhm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut r = rng(seed, FREQUENCY_STREAM);
    let draws = match shape {
        LineShape::Gaussian => {
            let d = Normal::new(0.0, fwhm / GAUSS_FWHM_PER_SIGMA).map_err(|e| domain(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut r)).collect()
        }
        LineShape::Lorentzian => {
            let d = Cauchy::new(0.0, fwhm / 2.0).map_err(|e| domain(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut r)).collect()
        }
    };
    Ok(draws)
}

pub fn assign_frequencies(centers: &mut [DopedCenter], spec: &CrystalSpec, seed: u64) -> Result<()> {
    let f = sample_line(centers.len(), spec.distribution, spec.inhomogeneous_width, seed)?;
    for (c, f) in centers.iter_mut().zip(f) {
        c.frequency = f;
    }
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile(&v, 0.5))
}

pub fn geometric_mean(values: &[f64]) -> f64 {
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// FWHM estimated from the half-maximum quantiles of the assumed shape.
pub fn sample_fwhm(frequencies: &[f64], shape: LineShape) -> Option<f64> {
    if frequencies.len() < 2 {
        return None;
    }
    let mut v = frequencies.to_vec();
    v.sort_by(f64::total_cmp);
    let q = match shape {
        LineShape::Gaussian => GAUSS_HALF_MAX_QUANTILE,
        LineShape::Lorentzian => 0.75,
    };
    Some(quantile(&v, q) - quantile(&v, 1.0 - q))
}

/// Indices of centres with |f − f₀| ≤ Γ_L/2. A zero-width window selects nothing.
pub fn spectral_select(centers: &[DopedCenter], f0: f64, gamma_l: f64) -> Vec<usize> {
    if !(gamma_l > 0.0) {
        return Vec::new();
    }
    let half = gamma_l / 2.0;
    centers
        .iter()
        .enumerate()
        .filter(|(_, c)| (c.frequency - f0).abs() <= half)
        .map(|(i, _)| i)
        .collect()
}

/// R₀ = (c·Γ_L/Γ_inh)^{-1/3}, lattice units.
pub fn mean_qubit_spacing(c: f64, gamma_l: f64, gamma_inh: f64) -> Result<f64> {
    if !(c > 0.0 && gamma_l > 0.0 && gamma_inh > 0.0) {
        return Err(domain("mean spacing needs c, Gamma_L, Gamma_inh > 0"));
    }
    Ok((gamma_inh / (c * gamma_l)).cbrt())
}

/// (N/c)^{1/3}, lattice units.
pub fn ensemble_radius(n: u32, c: f64) -> Result<f64> {
    if n < 1 || !(c > 0.0) {
        return Err(domain("ensemble radius needs N >= 1 and c > 0"));
    }
    Ok((f64::from(n) / c).cbrt())
}

/// c = (a/R₀)³.
pub fn min_pair_concentration(r0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(domain("R0 must be > 0"));
    }
    Ok(r0.powi(-3))
}

fn periodic_delta(a: i32, b: i32, l: i32) -> i32 {
    let d = (a - b).rem_euclid(l);
    d.min(l - d)
}

/// Squared minimum-image distance.
pub fn distance_sq(a: [i32; 3], b: [i32; 3], box_size: u32) -> i64 {
    let l = box_size as i32;
    (0..3)
        .map(|k| {
            let d = i64::from(periodic_delta(a[k], b[k], l));
            d * d
        })
        .sum()
}

pub fn distance(a: [i32; 3], b: [i32; 3], box_size: u32) -> f64 {
    (distance_sq(a, b, box_size) as f64).sqrt()
}

/// Cell list over a periodic box.
struct CellGrid {
    cells_per_axis: i32,
    cell: i32,
    buckets: Vec<Vec<usize>>,
}

impl CellGrid {
    fn new(positions: &[[i32; 3]], box_size: u32, reach: i32) -> Option<Self> {
        let l = box_size as i32;
        let cell = reach.max(1);
        let m = l / cell;
        if m < 3 {
            return None;
        }
        let mut buckets = vec![Vec::new(); (m * m * m) as usize];
        let g = Self { cells_per_axis: m, cell: l / m, buckets: Vec::new() };
        for (i, p) in positions.iter().enumerate() {
            buckets[g.index(g.cell_of(*p))].push(i);
        }
        Some(Self { buckets, ..g })
    }

    fn cell_of(&self, p: [i32; 3]) -> [i32; 3] {
        p.map(|x| (x / self.cell).min(self.cells_per_axis - 1))
    }

    fn index(&self, c: [i32; 3]) -> usize {
        let m = self.cells_per_axis;
        (c[0].rem_euclid(m) * m * m + c[1].rem_euclid(m) * m + c[2].rem_euclid(m)) as usize
    }

    fn neighbours(&self, p: [i32; 3]) -> impl Iterator<Item = usize> + '_ {
        let c = self.cell_of(p);
        (-1..=1).flat_map(move |dx| {
            (-1..=1).flat_map(move |dy| {
                (-1..=1).flat_map(move |dz| self.buckets[self.index([c[0] + dx, c[1] + dy, c[2] + dz])].iter().copied())
            })
        })
    }
}

/// Nearest other centre within `radius` for each centre, ties broken by index.
fn nearest_within(positions: &[[i32; 3]], box_size: u32, radius: f64) -> Vec<Option<usize>> {
    let r2 = radius * radius;
    let better = |best: Option<(i64, usize)>, cand: (i64, usize)| match best {
        Some(b) if b <= cand => Some(b),
        _ => Some(cand),
    };
    let reach = radius.ceil() as i32;
    match CellGrid::new(positions, box_size, reach) {
        Some(grid) => positions
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut best = None;
                for j in grid.neighbours(p) {
                    if j == i {
                        continue;
                    }
                    let d = distance_sq(p, positions[j], box_size);
                    if (d as f64) <= r2 {
                        best = better(best, (d, j));
                    }
                }
                best.map(|b| b.1)
            })
            .collect(),
        None => positions
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut best = None;
                for (j, &q) in positions.iter().enumerate() {
                    if j != i {
                        let d = distance_sq(p, q, box_size);
                        if (d as f64) <= r2 {
                            best = better(best, (d, j));
                        }
                    }
                }
                best.map(|b| b.1)
            })
            .collect(),
    }
}

/// Flags mutual nearest neighbours within `pair_radius` as pairs. Any
/// previous pair flags are discarded.
pub fn identify_pairs(centers: &mut [DopedCenter], pair_radius: f64, box_size: u32) {
    let positions: Vec<_> = centers.iter().map(|c| c.position).collect();
    let nn = nearest_within(&positions, box_size, pair_radius);
    for (i, c) in centers.iter_mut().enumerate() {
        c.partner = nn[i].filter(|&j| nn[j] == Some(i));
    }
}

/// Keeps a seeded random `fraction` of the identified pairs.
pub fn retain_pair_fraction(centers: &mut [DopedCenter], fraction: f64, seed: u64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(validation("pair fraction must be in [0, 1]"));
    }
    let mut pairs: Vec<(usize, usize)> = centers
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.partner.filter(|&j| i < j).map(|j| (i, j)))
        .collect();
    let keep = (fraction * pairs.len() as f64).round() as usize;
    pairs.shuffle(&mut rng(seed, PAIR_STREAM));
    for &(i, j) in &pairs[keep..] {
        centers[i].partner = None;
        centers[j].partner = None;
    }
    Ok(())
}

pub fn pair_fraction(centers: &[DopedCenter]) -> f64 {
    if centers.is_empty() {
        return 0.0;
    }
    centers.iter().filter(|c| c.is_pair_member()).count() as f64 / centers.len() as f64
}

/// Distance from each point to its nearest other point (periodic). O(n²).
pub fn nearest_neighbour_distances(positions: &[[i32; 3]], box_size: u32) -> Vec<f64> {
    positions
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            positions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &q)| distance_sq(p, q, box_size))
                .min()
                .map_or(f64::INFINITY, |d| (d as f64).sqrt())
        })
        .collect()
}

/// Indices of the `n` centres closest to `reference` (excluding it), nearest first.
pub fn closest_centers(centers: &[DopedCenter], reference: usize, n: usize, box_size: u32) -> Vec<usize> {
    let p = centers[reference].position;
    let mut order: Vec<(i64, usize)> = centers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != reference)
        .map(|(j, c)| (distance_sq(p, c.position, box_size), j))
        .collect();
    order.sort_unstable();
    order.into_iter().take(n).map(|(_, j)| j).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleBlockade {
    pub ensemble_size: u32,
    pub instances: usize,
    /// Mean distance from the reference to its N-th closest centre.
    pub mc_radius: f64,
    pub formula_radius: f64,
    pub median_nn_distance: f64,
    /// Median quadrupole shift to the nearest ensemble member, Hz.
    pub median_shift: f64,
    pub min_shift: f64,
    pub feasible_fraction: f64,
    pub median_feasible: bool,
    pub median_margin: f64,
}

/// Blockade statistics for N-centre ensembles around `instances` reference
/// centres spread evenly through the sample. Each member's shift is taken
/// to its nearest neighbour inside the ensemble (reference included).
#[allow(clippy::too_many_arguments)]
pub fn ensemble_blockade(
    centers: &[DopedCenter],
    spec: &CrystalSpec,
    n: u32,
    instances: usize,
    u2: f64,
    model: &BlockadeModel,
    gamma_l: f64,
) -> Result<EnsembleBlockade> {
    let nn = ensemble_nn_distances(centers, spec.box_size, n, instances)?;
    let mut shifts = Vec::with_capacity(nn.distances.len());
    for &r in &nn.distances {
        shifts.push(model.quadrupole_shift(u2, u2, r)?);
    }
    let median_shift = median(&shifts).unwrap_or(0.0);
    let feasible = shifts.iter().filter(|&&d| d > model.margin * gamma_l).count();
    let verdict = model.feasible(median_shift, gamma_l)?;
    Ok(EnsembleBlockade {
        ensemble_size: n,
        instances: nn.instances,
        mc_radius: nn.mean_radius,
        formula_radius: ensemble_radius(n, spec.concentration)?,
        median_nn_distance: median(&nn.distances).unwrap_or(f64::INFINITY),
        median_shift,
        min_shift: shifts.iter().copied().fold(f64::INFINITY, f64::min),
        feasible_fraction: feasible as f64 / shifts.len().max(1) as f64,
        median_feasible: verdict.feasible,
        median_margin: verdict.margin,
    })
}

struct EnsembleDistances {
    distances: Vec<f64>,
    mean_radius: f64,
    instances: usize,
}

fn ensemble_nn_distances(centers: &[DopedCenter], box_size: u32, n: u32, instances: usize) -> Result<EnsembleDistances> {
    let n = n as usize;
    if centers.len() < n + 1 {
        return Err(domain(format!("need at least {} centres for an N = {n} ensemble, have {}", n + 1, centers.len())));
    }
    let instances = instances.clamp(1, centers.len());
    let stride = centers.len() / instances;
    let mut distances = Vec::with_capacity(instances * (n + 1));
    let mut radius_sum = 0.0;
    for k in 0..instances {
        let reference = k * stride;
        let members = closest_centers(centers, reference, n, box_size);
        radius_sum += distance(centers[reference].position, centers[*members.last().unwrap()].position, box_size);
        let mut positions = vec![centers[reference].position];
        positions.extend(members.iter().map(|&j| centers[j].position));
        distances.extend(nearest_neighbour_distances(&positions, box_size));
    }
    Ok(EnsembleDistances { distances, mean_radius: radius_sum / instances as f64, instances })
}

/// C_qq such that the typical nearest-neighbour shift in N-centre ensembles
/// equals `target_hz` for |U⁽²⁾|² = `u2` on both ions. The typical distance
/// is the geometric mean; the median sits on discrete lattice shells.
pub fn calibrate_quadrupole_constant(
    spec: &CrystalSpec,
    n: u32,
    instances: usize,
    u2: f64,
    target_hz: f64,
    seed: u64,
) -> Result<f64> {
    let centers = sample_lattice(spec, seed)?;
    let nn = ensemble_nn_distances(&centers, spec.box_size, n, instances)?;
    let r = geometric_mean(&nn.distances);
    Ok(target_hz * r.powi(5) / u2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelAllocation {
    /// Indices into the input, in ascending frequency.
    pub selected_indices: Vec<usize>,
    pub min_gap: f64,
    pub channel_frequencies: Vec<f64>,
}

/// Largest subset with all pairwise gaps > `min_gap`: sort, then sweep
/// keeping each frequency that clears the last kept one.
pub fn allocate_channels(frequencies: &[f64], min_gap: f64) -> Result<ChannelAllocation> {
    if frequencies.iter().any(|f| !f.is_finite()) || !(min_gap >= 0.0) {
        return Err(domain("channel allocation needs finite frequencies and min_gap >= 0"));
    }
    let mut order: Vec<usize> = (0..frequencies.len()).collect();
    order.sort_by(|&a, &b| match frequencies[a].total_cmp(&frequencies[b]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    let mut selected = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for i in order {
        if frequencies[i] - last > min_gap {
            selected.push(i);
            last = frequencies[i];
        }
    }
    Ok(ChannelAllocation {
        channel_frequencies: selected.iter().map(|&i| frequencies[i]).collect(),
        selected_indices: selected,
        min_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(c: f64, l: u32) -> CrystalSpec {
        CrystalSpec {
            lattice_constant_nm: 0.546,
            concentration: c,
            inhomogeneous_width: 1e12,
            homogeneous_width: 1e6,
            box_size: l,
            distribution: LineShape::Gaussian,
        }
    }

    #[test]
    fn occupancy_limits() {
        assert!(sample_lattice(&spec(0.0, 10), 1).unwrap().is_empty());
        assert_eq!(sample_lattice(&spec(1.0, 10), 1).unwrap().len(), 1000);
    }

    #[test]
    fn occupancy_within_binomial_bounds() {
        let s = spec(0.01, 100);
        let n = sample_lattice(&s, 7).unwrap().len() as f64;
        let (mean, sigma) = (1e4, (1e6 * 0.01 * 0.99f64).sqrt());
        assert!((n - mean).abs() < 3.0 * sigma, "{n}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = spec(0.05, 20);
        let mut a = sample_lattice(&s, 42).unwrap();
        let mut b = sample_lattice(&s, 42).unwrap();
        assert_eq!(a, b);
        assign_frequencies(&mut a, &s, 42).unwrap();
        assign_frequencies(&mut b, &s, 42).unwrap();
        let bits = |v: &[DopedCenter]| v.iter().map(|c| c.frequency.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(sample_lattice(&s, 43).unwrap(), a.iter().map(|c| DopedCenter { frequency: 0.0, ..*c }).collect::<Vec<_>>());
    }

    #[test]
    fn zero_width_line() {
        assert!(sample_line(100, LineShape::Gaussian, 0.0, 3).unwrap().iter().all(|&f| f == 0.0));
    }

    #[test]
    fn gaussian_line_statistics() {
        let f = sample_line(1_000_000, LineShape::Gaussian, 1e12, 5).unwrap();
        let m = median(&f).unwrap();
        assert!(m.abs() < 0.01 * 1e12);
        let w = sample_fwhm(&f, LineShape::Gaussian).unwrap();
        assert!((w / 1e12 - 1.0).abs() < 0.02, "{w}");
    }

    #[test]
    fn gaussian_fwhm_by_histogram() {
        // Independent estimate: locate the half-maximum crossings of a histogram.
        let fwhm = 1e12;
        let f = sample_line(400_000, LineShape::Gaussian, fwhm, 8).unwrap();
        let bins = 200;
        let span = 2.0 * fwhm;
        let mut h = vec![0usize; bins];
        for x in &f {
            let k = ((x + span / 2.0) / span * bins as f64).floor();
            if (0.0..bins as f64).contains(&k) {
                h[k as usize] += 1;
            }
        }
        let peak = *h[bins / 2 - 5..bins / 2 + 5].iter().max().unwrap() as f64;
        let above: Vec<_> = (0..bins).filter(|&k| h[k] as f64 >= peak / 2.0).collect();
        let width = (above.last().unwrap() - above.first().unwrap() + 1) as f64 * span / bins as f64;
        assert!((width / fwhm - 1.0).abs() < 0.05, "{width}");
    }

    #[test]
    fn lorentzian_line_statistics() {
        let f = sample_line(200_000, LineShape::Lorentzian, 1e12, 9).unwrap();
        let w = sample_fwhm(&f, LineShape::Lorentzian).unwrap();
        assert!((w / 1e12 - 1.0).abs() < 0.05, "{w}");
    }

    #[test]
    fn spectral_window_limits() {
        let s = spec(0.02, 30);
        let mut c = sample_lattice(&s, 1).unwrap();
        assign_frequencies(&mut c, &s, 1).unwrap();
        let span = c.iter().map(|c| c.frequency.abs()).fold(0.0, f64::max) * 2.0;
        assert_eq!(spectral_select(&c, 0.0, span + 1.0).len(), c.len());
        assert!(spectral_select(&c, 0.0, 0.0).is_empty());
    }

    #[test]
    fn narrow_window_fraction() {
        let f = sample_line(2_000_000, LineShape::Gaussian, 1e12, 11).unwrap();
        let centers: Vec<_> = f.iter().map(|&f| DopedCenter { position: [0; 3], frequency: f, partner: None }).collect();
        let gamma_l = 1e10;
        let frac = spectral_select(&centers, 0.0, gamma_l).len() as f64 / centers.len() as f64;
        let expected = LineShape::Gaussian.peak_density_correction() * gamma_l / 1e12;
        assert!((frac / expected - 1.0).abs() < 0.05, "{frac} vs {expected}");
    }

    #[test]
    fn effective_concentration_order() {
        let c_eff = 0.01 * 1e-4 * LineShape::Gaussian.peak_density_correction();
        assert!(c_eff > 3e-7 && c_eff < 3e-6);
    }

    #[test]
    fn closed_form_estimates() {
        assert!((mean_qubit_spacing(0.01, 1e8, 1e12).unwrap() - 100.0).abs() < 1e-12);
        let r = mean_qubit_spacing(0.01, 1e8, 1e12).unwrap();
        assert!((mean_qubit_spacing(0.08, 1e8, 1e12).unwrap() - r / 2.0).abs() < 1e-12);
        let e = ensemble_radius(50, 0.01).unwrap();
        assert!((e - 17.0998).abs() < 1e-3);
        assert!((ensemble_radius(1, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((ensemble_radius(400, 0.01).unwrap() - 2.0 * e).abs() < 1e-12);
        assert!((min_pair_concentration(10f64.powf(5.0 / 3.0)).unwrap() - 1e-5).abs() < 1e-18);
        assert!((min_pair_concentration(46.4).unwrap() / 1e-5 - 1.0).abs() < 0.01);
        assert_eq!(min_pair_concentration(1.0).unwrap(), 1.0);
        assert!((min_pair_concentration(100.0).unwrap() - 1e-6).abs() < 1e-20);
        assert!(mean_qubit_spacing(0.0, 1.0, 1.0).is_err());
        assert!(ensemble_radius(0, 0.01).is_err());
    }

    #[test]
    fn isolated_pair_and_single() {
        let mk = |p: [i32; 3]| DopedCenter { position: p, frequency: 0.0, partner: None };
        let mut two = vec![mk([1, 1, 1]), mk([2, 1, 1]), mk([10, 10, 10])];
        identify_pairs(&mut two, 2.0, 20);
        assert_eq!(two[0].partner, Some(1));
        assert_eq!(two[1].partner, Some(0));
        assert_eq!(two[2].partner, None);
        let mut one = vec![mk([3, 3, 3])];
        identify_pairs(&mut one, 2.0, 20);
        assert!(!one[0].is_pair_member());
    }

    #[test]
    fn pairs_across_periodic_boundary() {
        let mk = |p: [i32; 3]| DopedCenter { position: p, frequency: 0.0, partner: None };
        let mut c = vec![mk([0, 5, 5]), mk([19, 5, 5])];
        identify_pairs(&mut c, 1.5, 20);
        assert_eq!(c[0].partner, Some(1));
    }

    /// O(n²) mutual-nearest-neighbour oracle.
    fn brute_pairs(centers: &[DopedCenter], radius: f64, l: u32) -> Vec<Option<usize>> {
        let nn: Vec<Option<usize>> = (0..centers.len())
            .map(|i| {
                (0..centers.len())
                    .filter(|&j| j != i)
                    .map(|j| (distance_sq(centers[i].position, centers[j].position, l), j))
                    .filter(|&(d, _)| (d as f64) <= radius * radius)
                    .min()
                    .map(|(_, j)| j)
            })
            .collect();
        (0..centers.len()).map(|i| nn[i].filter(|&j| nn[j] == Some(i))).collect()
    }

    #[test]
    fn pairs_match_brute_force() {
        let s = spec(0.01, 60);
        let mut c = sample_lattice(&s, 21).unwrap();
        identify_pairs(&mut c, 2.0, s.box_size);
        let expected = brute_pairs(&c, 2.0, s.box_size);
        assert_eq!(c.iter().map(|c| c.partner).collect::<Vec<_>>(), expected);
        assert!(pair_fraction(&c) > 0.0);
        // symmetric and idempotent
        for (i, ci) in c.iter().enumerate() {
            if let Some(j) = ci.partner {
                assert_eq!(c[j].partner, Some(i));
            }
        }
        let before = c.clone();
        identify_pairs(&mut c, 2.0, s.box_size);
        assert_eq!(before, c);
    }

    #[test]
    fn pair_fraction_override() {
        let s = spec(0.05, 30);
        let mut c = sample_lattice(&s, 4).unwrap();
        identify_pairs(&mut c, 2.0, s.box_size);
        let full = c.iter().filter(|c| c.is_pair_member()).count();
        retain_pair_fraction(&mut c, 0.5, 4).unwrap();
        let kept = c.iter().filter(|c| c.is_pair_member()).count();
        assert_eq!(kept, 2 * ((full / 2) as f64 * 0.5).round() as usize);
        for (i, ci) in c.iter().enumerate() {
            if let Some(j) = ci.partner {
                assert_eq!(c[j].partner, Some(i));
            }
        }
        assert!(retain_pair_fraction(&mut c, 1.5, 4).is_err());
    }

    #[test]
    fn channel_examples() {
        let a = allocate_channels(&[5.0; 6], 1.0).unwrap();
        assert_eq!(a.selected_indices.len(), 1);
        let grid: Vec<f64> = (0..10).rev().map(|k| k as f64 * 2.0).collect();
        let b = allocate_channels(&grid, 1.0).unwrap();
        assert_eq!(b.selected_indices.len(), 10);
        assert!(b.channel_frequencies.windows(2).all(|w| w[0] < w[1]));
        assert!(allocate_channels(&[f64::NAN], 1.0).is_err());
        assert!(allocate_channels(&[], 1.0).unwrap().selected_indices.is_empty());
    }

    /// Exhaustive subset search with hereditary pruning.
    fn brute_max(sorted: &[f64], gap: f64) -> usize {
        fn go(s: &[f64], gap: f64, i: usize, last: f64, count: usize) -> usize {
            if i == s.len() {
                return count;
            }
            let skip = go(s, gap, i + 1, last, count);
            if s[i] - last > gap {
                skip.max(go(s, gap, i + 1, s[i], count + 1))
            } else {
                skip
            }
        }
        go(sorted, gap, 0, f64::NEG_INFINITY, 0)
    }

    proptest! {
        #[test]
        fn greedy_is_optimal(freqs in proptest::collection::vec(0.0f64..10.0, 0..14), gap in 0.0f64..2.0) {
            let a = allocate_channels(&freqs, gap).unwrap();
            let mut s = freqs.clone();
            s.sort_by(f64::total_cmp);
            prop_assert_eq!(a.selected_indices.len(), brute_max(&s, gap));
            for w in a.channel_frequencies.windows(2) {
                prop_assert!(w[1] - w[0] > gap);
            }
        }

        #[test]
        fn distance_is_symmetric(a in proptest::array::uniform3(0i32..50), b in proptest::array::uniform3(0i32..50)) {
            prop_assert_eq!(distance_sq(a, b, 50), distance_sq(b, a, 50));
            prop_assert!(distance_sq(a, b, 50) <= 3 * 25 * 25);
        }
    }

    #[test]
    fn frozen_quadrupole_constant_reproduces() {
        let s = spec(0.01, 100);
        let c = calibrate_quadrupole_constant(&s, 50, 64, crate::interactions::CALIBRATION_U2, 1e9, 2024).unwrap();
        assert!((c / crate::interactions::DEFAULT_C_QQ - 1.0).abs() < 0.1, "{c:e}");
    }
}
