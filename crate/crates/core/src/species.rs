// Copyright 2026 The fastoqc Authors
// SPDX-License-Identifier: Apache-2.0

//! Ion species, their 4f levels, and qubit/auxiliary role assignments.
//!
//! The registry is seeded from `data/species.toml` and can be extended with
//! user data in the same schema. Level energies are stored in cm⁻¹ relative
//! to the ground level, which is normalized to 0 on load.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

const BUILTIN_DATA: &str = include_str!("../data/species.toml");

/// Threshold on |U⁽²⁾|² separating weakly from strongly interacting levels.
pub const DEFAULT_U2_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Preparation reservoir |g⟩. Only the energy-zero level can carry it.
    Ground,
    Qubit0,
    Qubit1,
    /// Strongly interacting |1'⟩ level used for conditional operations.
    Auxiliary,
    #[default]
    Unassigned,
}

impl Role {
    pub fn is_qubit(self) -> bool {
        matches!(self, Role::Qubit0 | Role::Qubit1)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Ground => "ground",
            Role::Qubit0 => "qubit0",
            Role::Qubit1 => "qubit1",
            Role::Auxiliary => "auxiliary",
            Role::Unassigned => "unassigned",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyLevel {
    pub term: String,
    /// cm⁻¹ above the ground level.
    pub energy_cm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_s: Option<f64>,
    /// Host crystal in which the lifetime was measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_host: Option<String>,
    /// Squared diagonal element |U⁽²⁾|².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u2_diag_sq: Option<f64>,
    #[serde(default)]
    pub role: Role,
}

impl EnergyLevel {
    pub fn decay_rate(&self) -> f64 {
        self.lifetime_s.map_or(0.0, |t| 1.0 / t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDatum {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u6: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radiative_rate: Option<f64>,
}

impl TransitionDatum {
    /// Squared reduced matrix elements keyed by rank.
    pub fn uk_sq(&self) -> BTreeMap<u8, f64> {
        [(2, self.u2), (4, self.u4), (6, self.u6)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect()
    }
}

/// A named alternative role assignment for the same level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleVariant {
    pub name: String,
    pub roles: BTreeMap<String, Role>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesScheme {
    pub name: String,
    pub host: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(rename = "level", default)]
    pub levels: Vec<EnergyLevel>,
    #[serde(rename = "transition", default)]
    pub transitions: Vec<TransitionDatum>,
    #[serde(rename = "variant", default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<RoleVariant>,
}

impl SpeciesScheme {
    pub fn level(&self, term: &str) -> Result<&EnergyLevel> {
        self.levels
            .iter()
            .find(|l| l.term == term)
            .ok_or_else(|| Error::Lookup(format!("{}: no level `{term}`", self.name)))
    }

    pub fn level_with_role(&self, role: Role) -> Option<&EnergyLevel> {
        self.levels.iter().find(|l| l.role == role)
    }

    /// The energy-zero level.
    pub fn ground_level(&self) -> Option<&EnergyLevel> {
        self.levels.iter().find(|l| l.energy_cm == 0.0)
    }

    /// |E_a − E_b| in cm⁻¹.
    pub fn transition_frequency(&self, a: &str, b: &str) -> Result<f64> {
        Ok((self.level(a)?.energy_cm - self.level(b)?.energy_cm).abs())
    }

    /// Copy of the scheme with the named variant's roles applied. Levels not
    /// named in the variant keep their current role.
    pub fn with_variant(&self, name: &str) -> Result<SpeciesScheme> {
        let variant = self
            .variants
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::Lookup(format!("{}: no role variant `{name}`", self.name)))?;
        self.with_roles(variant.roles.iter().map(|(t, r)| (t.as_str(), *r)))
    }

    pub fn with_roles<'a>(&self, roles: impl IntoIterator<Item = (&'a str, Role)>) -> Result<SpeciesScheme> {
        let mut out = self.clone();
        for (term, role) in roles {
            let idx = out
                .levels
                .iter()
                .position(|l| l.term == term)
                .ok_or_else(|| Error::Lookup(format!("{}: no level `{term}`", self.name)))?;
            out.levels[idx].role = role;
        }
        out.check()?;
        Ok(out)
    }

    /// Shift energies so the lowest level sits at 0 cm⁻¹.
    fn normalize(&mut self) {
        let min = self.levels.iter().map(|l| l.energy_cm).fold(f64::INFINITY, f64::min);
        if min.is_finite() && min != 0.0 {
            for l in &mut self.levels {
                l.energy_cm -= min;
            }
        }
    }

    /// Structural invariants.
    pub fn check(&self) -> Result<()> {
        let ctx = format!("{} in {}", self.name, self.host);
        let mut seen = BTreeMap::new();
        for l in &self.levels {
            if seen.insert(l.term.as_str(), ()).is_some() {
                return Err(validation(format!("{ctx}: duplicate level `{}`", l.term)));
            }
            if !(l.energy_cm.is_finite() && l.energy_cm >= 0.0) {
                return Err(validation(format!("{ctx}: level `{}` energy must be >= 0", l.term)));
            }
            if let Some(t) = l.lifetime_s {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(validation(format!("{ctx}: level `{}` lifetime must be > 0", l.term)));
                }
            }
            if let Some(u) = l.u2_diag_sq {
                if !(u >= 0.0 && u.is_finite()) {
                    return Err(validation(format!("{ctx}: level `{}` u2_diag_sq must be >= 0", l.term)));
                }
            }
        }
        let grounds = self.levels.iter().filter(|l| l.energy_cm == 0.0).count();
        if grounds != 1 {
            return Err(validation(format!("{ctx}: expected exactly one ground level, found {grounds}")));
        }
        for role in [Role::Ground, Role::Qubit0, Role::Qubit1, Role::Auxiliary] {
            let n = self.levels.iter().filter(|l| l.role == role).count();
            if n > 1 {
                return Err(validation(format!("{ctx}: role `{role}` assigned {n} times")));
            }
        }
        if let Some(g) = self.level_with_role(Role::Ground) {
            if g.energy_cm != 0.0 {
                return Err(validation(format!("{ctx}: role `ground` on non-ground level `{}`", g.term)));
            }
        }
        for t in &self.transitions {
            if t.from == t.to {
                return Err(validation(format!("{ctx}: transition `{}` -> itself", t.from)));
            }
            self.level(&t.from).map_err(|e| e.context(&ctx))?;
            self.level(&t.to).map_err(|e| e.context(&ctx))?;
            for (k, v) in t.uk_sq() {
                if !(v >= 0.0) {
                    return Err(validation(format!("{ctx}: U({k}) of {}->{} negative", t.from, t.to)));
                }
            }
        }
        for v in &self.variants {
            for term in v.roles.keys() {
                self.level(term).map_err(|e| e.context(format!("{ctx} variant `{}`", v.name)))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDiagnostic {
    pub term: String,
    pub role: Role,
    pub u2_diag_sq: Option<f64>,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub species: String,
    pub host: String,
    pub threshold: f64,
    pub passed: bool,
    pub diagnostics: Vec<LevelDiagnostic>,
}

impl ValidationReport {
    pub fn warnings(&self) -> impl Iterator<Item = &LevelDiagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Warning)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LevelDiagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Failure)
    }
}

/// Check role assignments against the U⁽²⁾ rule: qubit levels must have
/// small diagonal elements, auxiliary levels large ones.
pub fn validate_scheme(scheme: &SpeciesScheme, u2_threshold: f64) -> ValidationReport {
    let mut diagnostics = Vec::new();
    for level in &scheme.levels {
        let role = level.role;
        if !(role.is_qubit() || role == Role::Auxiliary) {
            continue;
        }
        let (severity, message) = match (level.u2_diag_sq, role) {
            (None, Role::Auxiliary) => (
                Severity::Warning,
                "no |U2|^2 data for auxiliary level; blockade strength unverified".to_string(),
            ),
            (None, _) => (Severity::Warning, "no |U2|^2 data; assumed small".to_string()),
            (Some(u), Role::Auxiliary) if u < u2_threshold => (
                Severity::Failure,
                format!("auxiliary level has |U2|^2 = {u} < {u2_threshold}"),
            ),
            (Some(u), Role::Auxiliary) => (Severity::Info, format!("|U2|^2 = {u} >= {u2_threshold}")),
            (Some(u), _) if u >= u2_threshold => (
                Severity::Failure,
                format!("qubit level has |U2|^2 = {u} >= {u2_threshold}"),
            ),
            (Some(u), _) => (Severity::Info, format!("|U2|^2 = {u} < {u2_threshold}")),
        };
        diagnostics.push(LevelDiagnostic {
            term: level.term.clone(),
            role,
            u2_diag_sq: level.u2_diag_sq,
            severity,
            message,
        });
    }
    let passed = !diagnostics.iter().any(|d| d.severity == Severity::Failure);
    ValidationReport {
        species: scheme.name.clone(),
        host: scheme.host.clone(),
        threshold: u2_threshold,
        passed,
        diagnostics,
    }
}

/// Free-function form of [`SpeciesScheme::transition_frequency`].
pub fn transition_frequency(scheme: &SpeciesScheme, a: &str, b: &str) -> Result<f64> {
    scheme.transition_frequency(a, b)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesFile {
    #[serde(default)]
    species: Vec<SpeciesScheme>,
}

fn parse_schemes(source: &str, origin: &str) -> Result<Vec<SpeciesScheme>> {
    let file: SpeciesFile =
        toml::from_str(source).map_err(|e| Error::Config(format!("{origin}: {}", e.to_string().trim_end())))?;
    let mut schemes = file.species;
    for s in &mut schemes {
        s.normalize();
        s.check()?;
    }
    Ok(schemes)
}

/// Immutable collection of species schemes keyed by (species, host).
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesRegistry {
    schemes: BTreeMap<(String, String), SpeciesScheme>,
}

impl SpeciesRegistry {
    pub fn builtin() -> Self {
        Self::from_sources(&[]).expect("built-in species data is valid")
    }

    fn from_sources(extra: &[(&str, &str)]) -> Result<Self> {
        let mut schemes = BTreeMap::new();
        for (origin, src) in std::iter::once(&("built-in species data", BUILTIN_DATA)).chain(extra) {
            for s in parse_schemes(src, origin)? {
                let key = (s.name.clone(), s.host.clone());
                if schemes.contains_key(&key) {
                    return Err(validation(format!("{origin}: duplicate species {} in {}", key.0, key.1)));
                }
                schemes.insert(key, s);
            }
        }
        Ok(Self { schemes })
    }

    /// Look up by species name, optionally disambiguated by host.
    pub fn get(&self, name: &str, host: Option<&str>) -> Result<&SpeciesScheme> {
        let mut matches = self
            .schemes
            .values()
            .filter(|s| s.name == name && host.is_none_or(|h| s.host == h));
        match (matches.next(), matches.next()) {
            (Some(s), None) => Ok(s),
            (Some(_), Some(_)) => Err(Error::Lookup(format!("species `{name}` is ambiguous; give a host"))),
            (None, _) => Err(Error::Lookup(match host {
                Some(h) => format!("unknown species `{name}` in `{h}`"),
                None => format!("unknown species `{name}`"),
            })),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &SpeciesScheme> {
        self.schemes.values()
    }

    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }
}

/// Built-in species plus those parsed from `source` (same TOML schema).
pub fn load_registry(source: &str) -> Result<SpeciesRegistry> {
    SpeciesRegistry::from_sources(&[("user species data", source)])
}
