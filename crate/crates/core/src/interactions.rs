// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Blockade shifts between centres: static quadrupole–quadrupole (Stark)
//! coupling driven by |U⁽²⁾|², and exchange dipole–dipole coupling driven by
//! oscillator strengths. Distances are in lattice units, shifts in Hz.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};

/// Quadrupole–quadrupole constant, Hz·a⁵ per unit |U⁽²⁾|².
///
/// Calibrated against the c = 0.01, N = 50 ensemble: typical (geometric-mean)
/// within-ensemble nearest-neighbour shift of 1 GHz for |U⁽²⁾|² = 1.25 on both ions.
/// See `ensemble::calibrate_quadrupole_constant`.
pub const DEFAULT_C_QQ: f64 = 9.3e10;

/// Reference |U⁽²⁾|² used for the calibration above.
pub const CALIBRATION_U2: f64 = 1.25;

/// Dipole–dipole constant, Hz·a³ per unit oscillator strength: point dipoles
/// at 20000 cm⁻¹ on a 0.546 nm lattice.
pub const DEFAULT_C_DD: f64 = 1.0e14;

pub const DEFAULT_BLOCKADE_MARGIN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockadeModel {
    pub c_qq: f64,
    pub c_dd: f64,
    pub margin: f64,
}

impl Default for BlockadeModel {
    fn default() -> Self {
        Self { c_qq: DEFAULT_C_QQ, c_dd: DEFAULT_C_DD, margin: DEFAULT_BLOCKADE_MARGIN }
    }
}

impl BlockadeModel {
    pub fn check(&self) -> Result<()> {
        if !(self.c_qq >= 0.0 && self.c_dd >= 0.0) {
            return Err(validation("coupling constants must be >= 0"));
        }
        if !(self.margin >= 1.0) {
            return Err(validation("blockade margin must be >= 1"));
        }
        Ok(())
    }

    pub fn quadrupole_shift(&self, u2_a: f64, u2_b: f64, r: f64) -> Result<f64> {
        power_law(self.c_qq, u2_a, u2_b, r, 5)
    }

    pub fn dipole_shift(&self, f_a: f64, f_b: f64, r: f64) -> Result<f64> {
        power_law(self.c_dd, f_a, f_b, r, 3)
    }

    pub fn feasible(&self, delta: f64, gamma_l: f64) -> Result<Feasibility> {
        blockade_feasible(delta, gamma_l, self.margin)
    }

    /// Distance at which the two laws give equal shifts. Inside it the
    /// quadrupole term dominates. `None` when either coupling vanishes.
    pub fn crossover_radius(&self, u2_a: f64, u2_b: f64, f_a: f64, f_b: f64) -> Option<f64> {
        let qq = self.c_qq * (u2_a * u2_b).sqrt();
        let dd = self.c_dd * (f_a * f_b).sqrt();
        (qq > 0.0 && dd > 0.0).then(|| (qq / dd).sqrt())
    }
}

fn power_law(c: f64, a: f64, b: f64, r: f64, n: i32) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain(format!("distance must be > 0, got {r}")));
    }
    if !(a >= 0.0 && b >= 0.0) {
        return Err(domain("coupling strengths must be >= 0"));
    }
    Ok(c * (a * b).sqrt() / r.powi(n))
}

/// δ = C_qq·sqrt(u2_a·u2_b)/R⁵ with the default constant.
pub fn quadrupole_shift(u2_a: f64, u2_b: f64, r: f64) -> Result<f64> {
    BlockadeModel::default().quadrupole_shift(u2_a, u2_b, r)
}

/// δ = C_dd·sqrt(f_a·f_b)/R³ with the default constant.
pub fn dipole_shift(f_a: f64, f_b: f64, r: f64) -> Result<f64> {
    BlockadeModel::default().dipole_shift(f_a, f_b, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// δ/(κ·Γ_L)
    pub margin: f64,
}

/// δ > κ·Γ_L (strict).
pub fn blockade_feasible(delta: f64, gamma_l: f64, kappa: f64) -> Result<Feasibility> {
    if !(gamma_l > 0.0) {
        return Err(domain("laser width must be > 0"));
    }
    let threshold = kappa * gamma_l;
    Ok(Feasibility { feasible: delta > threshold, margin: delta / threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paircenter::{pair_eigensystem_exact, PairParams};
    use proptest::prelude::*;

    #[test]
    fn quadrupole_examples() {
        assert_eq!(quadrupole_shift(0.0, 4.88, 3.0).unwrap(), 0.0);
        let a = quadrupole_shift(1.25, 1.25, 2.0).unwrap();
        let b = quadrupole_shift(1.25, 1.25, 4.0).unwrap();
        assert!((a / b - 32.0).abs() < 1e-12);
        assert!(quadrupole_shift(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn dipole_examples() {
        assert_eq!(dipole_shift(0.0, 1.0, 2.0).unwrap(), 0.0);
        let a = dipole_shift(1e-3, 1e-3, 5.0).unwrap();
        let b = dipole_shift(1e-3, 1e-3, 10.0).unwrap();
        assert!((a / b - 8.0).abs() < 1e-12);
        assert!(dipole_shift(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn bright_over_dark_shift_is_strength_ratio() {
        let s = pair_eigensystem_exact(&PairParams::new(1.0, 0.01, 1.0, 1e-3));
        let bb = dipole_shift(s.f_bright, s.f_bright, 7.0).unwrap();
        let dd = dipole_shift(s.f_dark, s.f_dark, 7.0).unwrap();
        assert!((bb / dd - s.f_bright / s.f_dark).abs() / (bb / dd) < 1e-10);
    }

    #[test]
    fn feasibility_examples() {
        let f = blockade_feasible(1e9, 1e8, 3.0).unwrap();
        assert!(f.feasible);
        assert!((f.margin - 10.0 / 3.0).abs() < 1e-12);
        assert!(!blockade_feasible(0.0, 1e8, 3.0).unwrap().feasible);
        assert!(!blockade_feasible(3e8, 1e8, 3.0).unwrap().feasible);
        assert!(blockade_feasible(1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn crossover_where_laws_meet() {
        let m = BlockadeModel::default();
        let r = m.crossover_radius(1.25, 1.25, 1e-6, 1e-6).unwrap();
        let qq = m.quadrupole_shift(1.25, 1.25, r).unwrap();
        let dd = m.dipole_shift(1e-6, 1e-6, r).unwrap();
        assert!((qq / dd - 1.0).abs() < 1e-12);
        assert!(m.quadrupole_shift(1.25, 1.25, 0.5 * r).unwrap() > m.dipole_shift(1e-6, 1e-6, 0.5 * r).unwrap());
        assert!(m.crossover_radius(0.0, 1.0, 1.0, 1.0).is_none());
    }

    #[test]
    fn model_checks() {
        assert!(BlockadeModel { margin: 0.5, ..Default::default() }.check().is_err());
        assert!(BlockadeModel { c_qq: -1.0, ..Default::default() }.check().is_err());
        assert!(BlockadeModel::default().check().is_ok());
    }

    proptest! {
        #[test]
        fn laws_homogeneous_and_decreasing(a in 0.01f64..10.0, b in 0.01f64..10.0, r in 0.5f64..100.0, s in 1.01f64..5.0) {
            let m = BlockadeModel::default();
            let q1 = m.quadrupole_shift(a, b, r).unwrap();
            let q2 = m.quadrupole_shift(a, b, s * r).unwrap();
            prop_assert!(q2 < q1);
            prop_assert!((q2 * s.powi(5) / q1 - 1.0).abs() < 1e-12);
            let d1 = m.dipole_shift(a, b, r).unwrap();
            let d2 = m.dipole_shift(a, b, s * r).unwrap();
            prop_assert!(d2 < d1);
            prop_assert!((d2 * s.powi(3) / d1 - 1.0).abs() < 1e-12);
            prop_assert_eq!(m.quadrupole_shift(a, b, r).unwrap(), m.quadrupole_shift(b, a, r).unwrap());
            prop_assert_eq!(m.dipole_shift(a, b, r).unwrap(), m.dipole_shift(b, a, r).unwrap());
        }

        #[test]
        fn feasibility_monotone(d in 0.0f64..1e10, d2 in 0.0f64..1e10, g in 1e6f64..1e10, g2 in 1e6f64..1e10) {
            let (lo, hi) = if d < d2 { (d, d2) } else { (d2, d) };
            if blockade_feasible(lo, g, 3.0).unwrap().feasible {
                prop_assert!(blockade_feasible(hi, g, 3.0).unwrap().feasible);
            }
            let (glo, ghi) = if g < g2 { (g, g2) } else { (g2, g) };
            if blockade_feasible(d, ghi, 3.0).unwrap().feasible {
                prop_assert!(blockade_feasible(d, glo, 3.0).unwrap().feasible);
            }
        }
    }
}
