//! Run configuration: TOML file, then command-line overrides, then validation.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub period: f64,
    pub n_h: usize,
    /// velocity nodes per column; n_v − 1 cells
    pub n_v: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { period: 2.0 * std::f64::consts::PI, n_h: 32, n_v: 33 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Domain {
    /// mean depth of the builtin bottoms
    pub depth: f64,
    /// `builtin:<id>` or a field file with one component `omega`
    pub omega: String,
    pub amplitude: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self { depth: 0.6, omega: "builtin:flat".into(), amplitude: 0.0 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Boundary {
    /// `builtin:<id>` or a field file with components u1 u2 u3
    pub data: String,
    pub amplitude: f64,
}

impl Default for Boundary {
    fn default() -> Self {
        Self { data: "builtin:spiral".into(), amplitude: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// relative GMRES residual of the channel solver
    pub solver: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { solver: 1e-10 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("rotstokes-out") }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: Grid,
    pub domain: Domain,
    pub boundary: Boundary,
    pub tolerances: Tolerances,
    pub output: Output,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let g = &self.grid;
        if !(g.period > 0.0 && g.period.is_finite()) {
            return bad(format!("grid.period = {} must be positive", g.period));
        }
        if !g.n_h.is_power_of_two() || g.n_h < 4 {
            return bad(format!("grid.n_h = {} must be a power of two, at least 4", g.n_h));
        }
        if g.n_v < 3 || !(g.n_v - 1).is_power_of_two() {
            return bad(format!("grid.n_v = {} must be one more than a power of two (2^k cells)", g.n_v));
        }
        let t = self.tolerances.solver;
        if !(t > 0.0 && t < 1.0) {
            return bad(format!("tolerances.solver = {t} must lie in (0, 1)"));
        }
        let d = &self.domain;
        if !(d.depth > 0.0 && d.depth <= 1.0) {
            return bad(format!("domain.depth = {} must lie in (0, 1]", d.depth));
        }
        if d.omega.starts_with("builtin:") && !(d.amplitude.abs() < d.depth && d.depth + d.amplitude.abs() <= 1.0) {
            return bad(format!(
                "domain.amplitude = {} keeps the builtin bottom inside [-1, 0) only if |amplitude| < depth and depth + |amplitude| <= 1",
                d.amplitude
            ));
        }
        if !self.boundary.amplitude.is_finite() || !d.amplitude.is_finite() {
            return bad("amplitudes must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("seed = 3\n[grid]\nn_h = 64\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.grid.n_h, 64);
        assert_eq!(c.grid.n_v, 33);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(matches!(RunConfig::from_toml("[grid]\nnh = 4\n"), Err(Error::Config(_))));
        let check = |s: &str| RunConfig::from_toml(s).unwrap().validate();
        assert!(check("[grid]\nn_h = 48\n").is_err());
        assert!(check("[grid]\nn_v = 32\n").is_err());
        assert!(check("[grid]\nperiod = -1.0\n").is_err());
        assert!(check("[tolerances]\nsolver = 1.0\n").is_err());
        assert!(check("[domain]\nomega = \"builtin:cosine\"\namplitude = 0.7\n").is_err());
        assert!(check("[domain]\nomega = \"builtin:cosine\"\namplitude = 0.2\n").is_ok());
    }
}
