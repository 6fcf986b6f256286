// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants and spectroscopic unit conversions.
//!
//! Everything inside the crate is SI. Wavenumbers in cm⁻¹ are accepted at
//! the boundaries (data files, configs) and converted here.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Impedance of free space, ohm. Fixed at 376.7 so worked pulse examples reproduce.
pub const Z0: f64 = 376.7;

/// Speed of light in cm/s, for wavenumber conversions.
const C_CM: f64 = C_LIGHT * 100.0;

/// The constant set used by the calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c_light: f64,
    pub z0: f64,
}

impl PhysicalConstants {
    pub const fn standard() -> Self {
        Self { hbar: HBAR, c_light: C_LIGHT, z0: Z0 }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralUnit {
    /// cm⁻¹
    Wavenumber,
    /// rad/s
    AngularFrequency,
    /// Hz
    Frequency,
    /// J
    Energy,
}

impl SpectralUnit {
    pub const ALL: [SpectralUnit; 4] = [
        SpectralUnit::Wavenumber,
        SpectralUnit::AngularFrequency,
        SpectralUnit::Frequency,
        SpectralUnit::Energy,
    ];

    fn to_hz_factor(self) -> f64 {
        match self {
            SpectralUnit::Wavenumber => C_CM,
            SpectralUnit::AngularFrequency => 1.0 / (2.0 * PI),
            SpectralUnit::Frequency => 1.0,
            SpectralUnit::Energy => 1.0 / (2.0 * PI * HBAR),
        }
    }
}

impl FromStr for SpectralUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cm-1" | "cm^-1" | "wavenumber" => Ok(SpectralUnit::Wavenumber),
            "rad/s" | "angular_frequency" => Ok(SpectralUnit::AngularFrequency),
            "Hz" | "hz" | "frequency" => Ok(SpectralUnit::Frequency),
            "J" | "energy" => Ok(SpectralUnit::Energy),
            other => Err(Error::Config(format!("unknown spectral unit `{other}`"))),
        }
    }
}

impl fmt::Display for SpectralUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectralUnit::Wavenumber => "cm-1",
            SpectralUnit::AngularFrequency => "rad/s",
            SpectralUnit::Frequency => "Hz",
            SpectralUnit::Energy => "J",
        })
    }
}

/// A value tagged with its spectroscopic unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralQuantity {
    pub value: f64,
    pub unit: SpectralUnit,
}

impl SpectralQuantity {
    pub fn new(value: f64, unit: SpectralUnit) -> Result<Self> {
        if !value.is_finite() {
            return Err(domain(format!("spectral value {value} is not finite")));
        }
        Ok(Self { value, unit })
    }

    pub fn wavenumber(cm_inv: f64) -> Result<Self> {
        Self::new(cm_inv, SpectralUnit::Wavenumber)
    }

    /// Converts to `target`. Negative values are rejected.
    pub fn convert(self, target: SpectralUnit) -> Result<Self> {
        if self.value < 0.0 {
            return Err(domain(format!(
                "spectroscopic quantity must be non-negative, got {} {}",
                self.value, self.unit
            )));
        }
        if target == self.unit {
            return Ok(self);
        }
        let hz = self.value * self.unit.to_hz_factor();
        Self::new(hz / target.to_hz_factor(), target)
    }

    pub fn in_unit(self, target: SpectralUnit) -> Result<f64> {
        self.convert(target).map(|q| q.value)
    }
}

/// Free-function form of [`SpectralQuantity::convert`].
pub fn convert(q: SpectralQuantity, target: SpectralUnit) -> Result<SpectralQuantity> {
    q.convert(target)
}

/// cm⁻¹ → rad/s.
pub fn wavenumber_to_angular(cm_inv: f64) -> f64 {
    2.0 * PI * C_CM * cm_inv
}

/// cm⁻¹ → Hz.
pub fn wavenumber_to_hz(cm_inv: f64) -> f64 {
    C_CM * cm_inv
}

/// k = ω·n/c in 1/m.
pub fn wave_number(omega: f64, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(domain(format!("refractive index must be >= 1, got {n}")));
    }
    if !(omega >= 0.0) {
        return Err(domain(format!("angular frequency must be >= 0, got {omega}")));
    }
    Ok(omega * n / C_LIGHT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_wavenumber_is_zero_angular() {
        let q = SpectralQuantity::wavenumber(0.0).unwrap();
        assert_eq!(q.in_unit(SpectralUnit::AngularFrequency).unwrap(), 0.0);
    }

    #[test]
    fn one_wavenumber_in_hz() {
        let hz = SpectralQuantity::wavenumber(1.0).unwrap().in_unit(SpectralUnit::Frequency).unwrap();
        assert!((hz - 29.979_245_8e9).abs() / 29.979_245_8e9 < 1e-14);
    }

    #[test]
    fn green_light_angular_frequency() {
        let w = SpectralQuantity::wavenumber(20_000.0)
            .unwrap()
            .in_unit(SpectralUnit::AngularFrequency)
            .unwrap();
        // 2π·c·ṽ
        assert!((w - 3.767_303_e15).abs() / w < 1e-6, "{w}");
    }

    #[test]
    fn unknown_unit_tag() {
        assert!(matches!("furlongs".parse::<SpectralUnit>(), Err(Error::Config(_))));
        assert_eq!("cm-1".parse::<SpectralUnit>().unwrap(), SpectralUnit::Wavenumber);
    }

    #[test]
    fn negative_value_rejected() {
        let q = SpectralQuantity::wavenumber(-1.0).unwrap();
        assert!(q.convert(SpectralUnit::Energy).is_err());
    }

    #[test]
    fn wave_number_examples() {
        assert_eq!(wave_number(0.0, 1.43).unwrap(), 0.0);
        let w = wavenumber_to_angular(20_000.0);
        let k1 = wave_number(w, 1.0).unwrap();
        assert!((k1 - 1.256_637e7).abs() / k1 < 1e-6, "{k1}");
        assert_eq!(wave_number(w, 2.0).unwrap(), 2.0 * k1);
        assert!(wave_number(w, 0.9).is_err());
    }

    proptest! {
        #[test]
        fn conversions_round_trip(v in 0.0f64..1e6, a in 0usize..4, b in 0usize..4) {
            let (ua, ub) = (SpectralUnit::ALL[a], SpectralUnit::ALL[b]);
            let q = SpectralQuantity::new(v, ua).unwrap();
            let back = q.convert(ub).unwrap().convert(ua).unwrap();
            prop_assert!((back.value - v).abs() <= 1e-12 * v.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn wave_number_is_bilinear(w in 0.0f64..1e16, n in 1.0f64..4.0, s in 1.0f64..8.0) {
            let k = wave_number(w, n).unwrap();
            let kw = wave_number(s * w, n).unwrap();
            prop_assert!((kw - s * k).abs() <= 1e-12 * kw.abs().max(1e-300));
        }
    }
}
