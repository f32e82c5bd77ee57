//! Run configuration: flat `key = value` text with dotted section prefixes.
//!
//! ```text
//! # comments and blank lines are ignored
//! grid.n = 256
//! grid.half_width = 24
//! evolution.scheme = leapfrog
//! nonlinearity.n1 = 1, 0.5, -0.5, 0.25
//! data.amplitude = 0.05
//! ```
//!
//! Every key has a default (see [`KEYS`]); unknown or repeated keys are
//! rejected. Lists are comma separated.

use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;
use wkg_core::data::{DataProfile, DataShape};
use wkg_core::diagnostics::{Bound, BootstrapConfig};
use wkg_core::energies::{EnergyConfig, Normalization};
use wkg_core::{Axis, EvolutionConfig, Grid, GridSpec, NullFormSpec, Scheme};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("bad value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Recognized keys and their defaults, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("grid.n", "256"),
    ("grid.half_width", "24"),
    ("grid.cfl", "0.4"),
    ("grid.dt", ""),
    ("grid.stencil_order", "4"),
    ("evolution.scheme", "leapfrog"),
    ("evolution.horizon", "10"),
    ("evolution.stride", "10"),
    ("evolution.truncation_t0", ""),
    ("evolution.kick_iterations", "2"),
    ("evolution.blowup_factor", "1e6"),
    ("evolution.b_integral_cap", "inf"),
    ("nonlinearity.n1", "0, 0, 0, 0"),
    ("nonlinearity.n2", "0, 0, 0, 0"),
    ("nonlinearity.axis", "x1"),
    ("data.shape", "gaussian"),
    ("data.amplitude", "0.05"),
    ("data.center", "0, 0"),
    ("data.width", "1"),
    ("data.radius", "0"),
    ("data.components", "1, 0, 1, 0"),
    ("energy.n_max", "2"),
    ("energy.evf_cap", "4"),
    ("energy.h_eff", "2"),
    ("energy.ghost_s", "1, 2, 4"),
    ("energy.normalization", "plain"),
    ("diagnostics.regions", "true"),
    ("diagnostics.xt", "true"),
    ("diagnostics.bootstrap", "false"),
    ("diagnostics.bootstrap_c", "10"),
    ("diagnostics.bootstrap_delta", "0.05"),
    ("diagnostics.smallness_h", "1"),
    ("output.dir", ""),
    ("sweep.eps", ""),
];

#[derive(Clone, Debug)]
pub struct Diagnostics {
    pub regions: bool,
    pub xt: bool,
    pub bootstrap: Option<BootstrapConfig>,
    pub smallness_h: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub evolution: EvolutionConfig,
    pub data: DataProfile,
    pub energy: EnergyConfig,
    pub diagnostics: Diagnostics,
    /// Run directory name below the output root.
    pub output_dir: String,
    pub eps_list: Vec<f64>,
    /// Effective value of every key, for the metadata record.
    pub effective: BTreeMap<String, String>,
}

fn syntax(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { line, msg: msg.into() }
}

/// Split the text into `key → value`, rejecting unknown and repeated keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| syntax(i + 1, format!("expected `key = value`, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(syntax(i + 1, "empty key"));
        }
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::Duplicate(k.to_string()));
        }
    }
    Ok(out)
}

struct Values {
    map: BTreeMap<String, String>,
}

impl Values {
    fn raw(&self, key: &str) -> &str {
        self.map.get(key).map(String::as_str).unwrap_or("")
    }

    fn bad(key: &str, msg: impl std::fmt::Display) -> ConfigError {
        ConfigError::Value { key: key.to_string(), msg: msg.to_string() }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).parse().map_err(|e| Self::bad(key, e))
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| Self::bad(key, e))).collect()
    }

    fn array<const N: usize>(&self, key: &str) -> Result<[f64; N], ConfigError> {
        let v = self.list(key)?;
        v.try_into().map_err(|v: Vec<f64>| Self::bad(key, format!("expected {N} numbers, got {}", v.len())))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
        Self::from_text(&text, &stem)
    }

    /// Parse and validate. `default_dir` names the run directory when
    /// `output.dir` is not set.
    pub fn from_text(text: &str, default_dir: &str) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        map.extend(parse_pairs(text)?);
        if map["output.dir"].is_empty() {
            map.insert("output.dir".into(), default_dir.to_string());
        }
        let v = Values { map };

        let (n, half_width, order) = (v.get("grid.n")?, v.get("grid.half_width")?, v.get("grid.stencil_order")?);
        let grid = match v.opt::<f64>("grid.dt")? {
            Some(dt) => GridSpec::with_dt(n, half_width, dt, order),
            None => GridSpec::new(n, half_width, v.get("grid.cfl")?, order),
        }
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let axis = match v.raw("nonlinearity.axis") {
            "x1" | "1" => Axis::X1,
            "x2" | "2" => Axis::X2,
            other => return Err(Values::bad("nonlinearity.axis", format!("expected x1 or x2, got `{other}`"))),
        };
        let spec = NullFormSpec::new(v.array("nonlinearity.n1")?, v.array("nonlinearity.n2")?, axis)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let scheme = match v.raw("evolution.scheme") {
            "leapfrog" => Scheme::Leapfrog,
            "rk4" => Scheme::Rk4,
            other => return Err(Values::bad("evolution.scheme", format!("expected leapfrog or rk4, got `{other}`"))),
        };
        let evolution = EvolutionConfig {
            spec,
            scheme,
            horizon: v.get("evolution.horizon")?,
            truncation_t0: v.opt("evolution.truncation_t0")?,
            snapshot_stride: v.get("evolution.stride")?,
            store_snapshots: false,
            kick_iterations: v.get("evolution.kick_iterations")?,
            blowup_factor: v.get("evolution.blowup_factor")?,
            b_integral_cap: v.get("evolution.b_integral_cap")?,
        };
        evolution.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let data = DataProfile {
            shape: v.raw("data.shape").parse::<DataShape>().map_err(|e| Values::bad("data.shape", e))?,
            amplitude: v.get("data.amplitude")?,
            center: v.array("data.center")?,
            width: v.get("data.width")?,
            radius: v.get("data.radius")?,
            components: v.array("data.components")?,
        };
        data.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let energy = EnergyConfig {
            n_max: v.get("energy.n_max")?,
            evf_cap: v.get("energy.evf_cap")?,
            h: v.get("energy.h_eff")?,
            ghost_s: v.list("energy.ghost_s")?,
            normalization: match v.raw("energy.normalization") {
                "plain" => Normalization::Plain,
                "half" => Normalization::Half,
                other => return Err(Values::bad("energy.normalization", format!("expected plain or half, got `{other}`"))),
            },
        };
        if energy.n_max == 0 || energy.h == 0 {
            return Err(ConfigError::Invalid("energy.n_max and energy.h_eff must be ≥ 1".into()));
        }
        if energy.required_depth() > wkg_core::tower::DEFAULT_K_MAX {
            return Err(ConfigError::Invalid(format!(
                "energies need {} time derivatives, more than the supported {}",
                energy.required_depth(),
                wkg_core::tower::DEFAULT_K_MAX
            )));
        }
        if energy.ghost_s.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Values::bad("energy.ghost_s", "values must be > 0"));
        }

        let bootstrap = if v.get::<bool>("diagnostics.bootstrap")? {
            let cfg = BootstrapConfig {
                c: v.get("diagnostics.bootstrap_c")?,
                delta: v.get("diagnostics.bootstrap_delta")?,
                which: Bound::ALL.to_vec(),
            };
            cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            Some(cfg)
        } else {
            None
        };
        let diagnostics = Diagnostics {
            regions: v.get("diagnostics.regions")?,
            xt: v.get("diagnostics.xt")?,
            bootstrap,
            smallness_h: v.get("diagnostics.smallness_h")?,
        };

        let eps_list = v.list("sweep.eps")?;
        if eps_list.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Values::bad("sweep.eps", "amplitudes must be finite and ≥ 0"));
        }

        let cfg = RunConfig {
            grid,
            evolution,
            data,
            energy,
            diagnostics,
            output_dir: v.raw("output.dir").to_string(),
            eps_list,
            effective: v.map,
        };
        cfg.check_containment()?;
        Ok(cfg)
    }

    /// The periodic wrap must stay invisible: data support plus the distance
    /// light travels by the horizon has to fit inside the box.
    fn check_containment(&self) -> Result<(), ConfigError> {
        let c = self.data.center;
        let reach = c[0].abs().max(c[1].abs()) + self.data.support_radius() + self.evolution.horizon;
        if reach >= self.grid.half_width {
            return Err(ConfigError::Invalid(format!(
                "data support ({:.3}) plus horizon ({}) reaches {:.3}, not inside the half-width {}",
                self.data.support_radius(),
                self.evolution.horizon,
                reach,
                self.grid.half_width
            )));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Grid {
        Grid::new(self.grid).expect("validated grid spec")
    }

    /// Copy of this configuration with another data amplitude (sweeps).
    pub fn with_amplitude(&self, eps: f64) -> RunConfig {
        let mut out = self.clone();
        out.data.amplitude = eps;
        out.effective.insert("data.amplitude".into(), format!("{eps}"));
        out.effective.insert("sweep.eps".into(), String::new());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::from_text("", "x").unwrap();
        assert_eq!(c.grid.n, 256);
        assert_eq!(c.output_dir, "x");
        assert!(c.evolution.spec.is_zero());
    }

    #[test]
    fn comments_and_lists() {
        let c = RunConfig::from_text(
            "# run\ngrid.n = 64   # small\nnonlinearity.n1 = 1, 0, 0, 0\nsweep.eps = 0.1,0.2\n",
            "x",
        )
        .unwrap();
        assert_eq!(c.grid.n, 64);
        assert_eq!(c.evolution.spec.n1_coeffs, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.eps_list, vec![0.1, 0.2]);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed() {
        assert!(matches!(RunConfig::from_text("grid.m = 3", "x"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::from_text("grid.n = 64\ngrid.n = 64", "x"), Err(ConfigError::Duplicate(_))));
        assert!(matches!(RunConfig::from_text("grid.n 64", "x"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::from_text("data.center = 1", "x"), Err(ConfigError::Value { .. })));
    }

    #[test]
    fn rejects_cfl_violation_and_uncontained_runs() {
        assert!(matches!(RunConfig::from_text("grid.dt = 1.0", "x"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::from_text("evolution.horizon = 30", "x"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::from_text("data.amplitude = -1", "x"), Err(ConfigError::Invalid(_))));
    }
}
