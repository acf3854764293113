//! Run configuration: a flat `key = value` file with `#` comments.
//!
//! Unknown keys are hard errors so a typo cannot silently fall back to a
//! default. Values are validated here once; the solver revalidates the
//! numerical subset it receives.

use pulse_area::{make_params, ModelParams, SolverConfig};
use std::fmt;
use std::path::{Path, PathBuf};

/// Parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Characteristic time 1/M, ns.
    pub m_inv_ns: f64,
    /// Damping values to sweep, in file order.
    pub lambda_sweep: Vec<f64>,
    /// Dipole coupling.
    pub mu: f64,
    /// Lower area cutoff, rad.
    pub theta_min: f64,
    /// Upper area bound, rad; None picks the per-lambda default.
    pub theta_max: Option<f64>,
    /// Output rows per trajectory.
    pub n_grid: usize,
    /// Absolute tolerance.
    pub abs_tol: f64,
    /// Relative tolerance.
    pub rel_tol: f64,
    /// Output directory.
    pub out_dir: PathBuf,
    /// Output format; only "csv" is defined.
    pub format: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m_inv_ns: 0.5,
            lambda_sweep: vec![0.0, 0.1, 0.25, 0.5, 1.0],
            mu: 1.0,
            theta_min: 1e-3,
            theta_max: None,
            n_grid: 1001,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            out_dir: PathBuf::from("out"),
            format: "csv".into(),
        }
    }
}

/// Configuration failure with enough context to fix the file.
#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, source: std::io::Error },
    Syntax { line: usize, text: String },
    UnknownKey { line: usize, key: String },
    BadValue { key: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => {
                write!(f, "cannot read config {}: {source}", path.display())
            }
            ConfigError::Syntax { line, text } => {
                write!(f, "config line {line} is not 'key = value': {text:?}")
            }
            ConfigError::UnknownKey { line, key } => {
                write!(f, "config line {line}: unknown key '{key}'")
            }
            ConfigError::BadValue { key, reason } => {
                write!(f, "config key '{key}': {reason}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    /// Load from a file, or defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::parse(&text)?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse the flat key = value format; later lines win over earlier
    /// ones, everything starts from the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                text: raw.trim().to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "m_inv_ns" => cfg.m_inv_ns = parse_f64(key, value)?,
                "lambda_sweep" => cfg.lambda_sweep = parse_sweep(value)?,
                "mu" => cfg.mu = parse_f64(key, value)?,
                "theta_min" => cfg.theta_min = parse_f64(key, value)?,
                "theta_max" => cfg.theta_max = Some(parse_f64(key, value)?),
                "n_grid" => {
                    cfg.n_grid = value.parse().map_err(|_| ConfigError::BadValue {
                        key: key.into(),
                        reason: format!("expected a positive integer, got {value:?}"),
                    })?
                }
                "abs_tol" => cfg.abs_tol = parse_f64(key, value)?,
                "rel_tol" => cfg.rel_tol = parse_f64(key, value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "format" => cfg.format = value.to_string(),
                other => {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        key: other.to_string(),
                    })
                }
            }
        }
        Ok(cfg)
    }

    /// Structural checks independent of any particular lambda.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let bad = |key: &str, reason: String| {
            Err(ConfigError::BadValue {
                key: key.into(),
                reason,
            })
        };
        if !(self.m_inv_ns.is_finite() && self.m_inv_ns > 0.0) {
            return bad("m_inv_ns", format!("must be positive, got {}", self.m_inv_ns));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return bad("mu", format!("must be positive, got {}", self.mu));
        }
        if self.lambda_sweep.is_empty() {
            return bad("lambda_sweep", "must list at least one value".into());
        }
        for (i, &l) in self.lambda_sweep.iter().enumerate() {
            if !(l.is_finite() && l >= 0.0) {
                return bad(
                    "lambda_sweep",
                    format!("entry {} must be finite and non-negative, got {l}", i + 1),
                );
            }
            if self.lambda_sweep[..i].contains(&l) {
                return bad(
                    "lambda_sweep",
                    format!("value {l} appears twice; output files would collide"),
                );
            }
        }
        if !(self.theta_min.is_finite()
            && self.theta_min > 0.0
            && self.theta_min < std::f64::consts::PI)
        {
            return bad(
                "theta_min",
                format!("must lie in (0, pi), got {}", self.theta_min),
            );
        }
        if let Some(tm) = self.theta_max {
            if !(tm.is_finite() && tm > std::f64::consts::PI) {
                return bad("theta_max", format!("must exceed pi, got {tm}"));
            }
            if tm <= self.theta_min {
                return bad("theta_max", format!("must exceed theta_min, got {tm}"));
            }
        }
        if self.n_grid < 2 {
            return bad("n_grid", format!("need at least 2 rows, got {}", self.n_grid));
        }
        for (key, v) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                return bad(key, format!("must lie in (0, 1), got {v}"));
            }
        }
        if self.format != "csv" {
            return bad(
                "format",
                format!("only 'csv' is supported, got {:?}", self.format),
            );
        }
        Ok(())
    }

    /// Model parameters for one sweep entry.
    pub fn params_for(&self, lambda: f64) -> Result<ModelParams, pulse_area::Error> {
        Ok(make_params(self.m_inv_ns, lambda)?.with_mu(self.mu)?)
    }

    /// Solver controls for one sweep entry; the explicit theta_max, when
    /// present, overrides the per-lambda default.
    pub fn solver_config_for(&self, lambda: f64) -> SolverConfig {
        let mut sc = SolverConfig::for_lambda(lambda);
        sc.theta_min = self.theta_min;
        if let Some(tm) = self.theta_max {
            sc.theta_max = tm;
        }
        sc.n_grid = self.n_grid;
        sc.abs_tol = self.abs_tol;
        sc.rel_tol = self.rel_tol;
        sc
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        reason: format!("expected a number, got {value:?}"),
    })?;
    if !v.is_finite() {
        return Err(ConfigError::BadValue {
            key: key.into(),
            reason: format!("must be finite, got {value:?}"),
        });
    }
    Ok(v)
}

fn parse_sweep(value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|s| parse_f64("lambda_sweep", s.trim()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_load_without_a_file() {
        let cfg = RunConfig::load(None).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.lambda_sweep, vec![0.0, 0.1, 0.25, 0.5, 1.0]);
        assert_eq!(cfg.n_grid, 1001);
    }

    #[test]
    fn full_file_round_trips() {
        let text = "\
# sweep for the strong-damping comparison
m_inv_ns = 0.25
lambda_sweep = 0.5, 2, 10   # three dampings
mu = 2.0
theta_min = 5e-4
theta_max = 25.0
n_grid = 501
abs_tol = 1e-11
rel_tol = 1e-9
out_dir = runs/strong
format = csv
";
        let mut cfg = RunConfig::parse(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.m_inv_ns, 0.25);
        assert_eq!(cfg.lambda_sweep, vec![0.5, 2.0, 10.0]);
        assert_eq!(cfg.mu, 2.0);
        assert_eq!(cfg.theta_min, 5e-4);
        assert_eq!(cfg.theta_max, Some(25.0));
        assert_eq!(cfg.n_grid, 501);
        assert_eq!(cfg.out_dir, PathBuf::from("runs/strong"));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse("frobnicate = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("frobnicate"), "message was: {msg}");
        assert!(msg.contains("line 1"), "message was: {msg}");
    }

    #[test]
    fn bad_values_are_rejected_with_the_key() {
        for (text, key) in [
            ("m_inv_ns = zero", "m_inv_ns"),
            ("m_inv_ns = -1", "m_inv_ns"),
            ("lambda_sweep = 0.1, -2", "lambda_sweep"),
            ("lambda_sweep = 0.5, 0.5", "lambda_sweep"),
            ("rel_tol = 1.5", "rel_tol"),
            ("abs_tol = 0", "abs_tol"),
            ("n_grid = 1", "n_grid"),
            ("theta_min = 4", "theta_min"),
            ("theta_max = 2", "theta_max"),
            ("format = json", "format"),
            ("mu = nan", "mu"),
        ] {
            let err = match RunConfig::parse(text) {
                Err(e) => e,
                Ok(mut cfg) => cfg.validate().unwrap_err(),
            };
            assert!(
                err.to_string().contains(key),
                "{text:?} should name {key}, got: {err}"
            );
        }
    }

    #[test]
    fn syntax_errors_carry_the_line() {
        let err = RunConfig::parse("m_inv_ns = 0.5\nthis is not a setting\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "got: {err}");
    }

    #[test]
    fn per_lambda_defaults_follow_damping() {
        let cfg = RunConfig::default();
        let undamped = cfg.solver_config_for(0.0);
        assert!(undamped.theta_max < 2.0 * std::f64::consts::PI);
        let damped = cfg.solver_config_for(1.0);
        assert!((damped.theta_max - 6.0 * std::f64::consts::PI).abs() < 1e-12);

        // An explicit bound overrides both.
        let mut cfg = RunConfig::default();
        cfg.theta_max = Some(9.0);
        assert_eq!(cfg.solver_config_for(1.0).theta_max, 9.0);
        assert_eq!(cfg.solver_config_for(0.0).theta_max, 9.0);
    }

    #[test]
    fn params_carry_mu() {
        let mut cfg = RunConfig::default();
        cfg.mu = 1.5;
        let p = cfg.params_for(0.5).unwrap();
        assert_eq!(p.mu(), 1.5);
        assert_eq!(p.m(), 2.0);
        assert_eq!(p.lambda(), 0.5);
    }
}
