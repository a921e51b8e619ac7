//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment. Command-line overrides
//! use the same keys and win over the file. Unknown keys, duplicates and
//! malformed values are rejected with the offending key named.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use kerr_qsd::{FockDim, ModelParams};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("key `{key}` given twice")]
    Duplicate { key: String },
    #[error("missing required key `{key}`")]
    Missing { key: &'static str },
    #[error("key `{key}`: cannot read `{value}` as {expected}")]
    Type { key: &'static str, value: String, expected: &'static str },
    #[error("key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Every accepted key with a one-line meaning.
pub const KEYS: &[(&str, &str)] = &[
    ("kappa", "damping rate κ (required)"),
    ("drive", "drive amplitude β (required)"),
    ("chi", "Kerr coefficient χ ≥ 0 (required)"),
    ("detuning", "detuning Δω (default 0)"),
    ("engine", "fixed | mqsd | classical (classical: hysteresis only)"),
    ("dim", "fixed-basis Fock dimension (default 40)"),
    ("local_dim", "moving-basis local dimension (default 30)"),
    ("dt", "time step (default derived from the basis size)"),
    ("t_final", "trajectory duration (default 10)"),
    ("seed", "64-bit seed (default 0)"),
    ("n_traj", "number of trajectories (default 100)"),
    ("t_m", "hysteresis waiting time per detuning (default 50)"),
    ("step", "detuning step for sweeps (default 0.1)"),
    ("detuning_range", "sweep range `lo, hi` (default -10, 2)"),
    ("record_stride", "steps between recorded samples (default 10)"),
    ("recenter_threshold", "moving-basis recentering radius (default 0.1)"),
    ("radius_fraction", "basin radius over branch distance (default 0.35)"),
    ("burn_in", "time discarded before dwell statistics (default 3/κ)"),
    ("start", "initial coherent state `Q, P` (default 0, 0)"),
    ("start_branch", "decay start: metastable | lower | upper"),
    ("x_range", "domain-map x = (κ/2)/(Δω+χ) range (default -0.6, -0.005)"),
    ("y_range", "domain-map y = (κ/2)³/(β²χ) range (default 0.0005, 0.05)"),
    ("grid", "domain-map points per axis (default 100)"),
];

const REQUIRED: &[&str] = &["kappa", "drive", "chi"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Fixed,
    Mqsd,
    Classical,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Fixed => "fixed",
            EngineKind::Mqsd => "mqsd",
            EngineKind::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartBranchKind {
    Metastable,
    Lower,
    Upper,
}

impl StartBranchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StartBranchKind::Metastable => "metastable",
            StartBranchKind::Lower => "lower",
            StartBranchKind::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub engine: EngineKind,
    pub dim: FockDim,
    pub local_dim: FockDim,
    /// `None` picks a default from the active basis size.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub seed: u64,
    pub n_traj: usize,
    pub t_m: f64,
    pub step: f64,
    pub detuning_range: (f64, f64),
    pub record_stride: usize,
    pub recenter_threshold: f64,
    pub radius_fraction: f64,
    pub burn_in: Option<f64>,
    pub start: (f64, f64),
    pub start_branch: StartBranchKind,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub grid: usize,
}

/// Raw assignments keyed by name, remembering where each came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, text: line.trim().to_string() });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, text: line.trim().to_string() });
            }
            check_known(k)?;
            if raw.entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate { key: k.to_string() });
            }
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides on top of the file contents.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let Some((k, v)) = o.split_once('=') else {
                return Err(ConfigError::Syntax { line: 0, text: o.to_string() });
            };
            let k = k.trim();
            check_known(k)?;
            self.entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        for key in REQUIRED {
            if self.get(key).is_none() {
                return Err(ConfigError::Missing { key });
            }
        }
        let kappa = self.f64("kappa")?.unwrap();
        let drive = self.f64("drive")?.unwrap();
        let chi = self.f64("chi")?.unwrap();
        let detuning = self.f64("detuning")?.unwrap_or(0.0);
        let params = ModelParams::new(detuning, drive, chi, kappa).map_err(|e| match e {
            kerr_qsd::Error::InvalidParameter { name, reason } => ConfigError::Invalid { key: name, reason },
            other => ConfigError::Invalid { key: "kappa", reason: other.to_string() },
        })?;
        let engine = match self.get("engine").unwrap_or("fixed") {
            "fixed" => EngineKind::Fixed,
            "mqsd" => EngineKind::Mqsd,
            "classical" => EngineKind::Classical,
            v => return Err(type_err("engine", v, "fixed | mqsd | classical")),
        };
        let start_branch = match self.get("start_branch").unwrap_or("metastable") {
            "metastable" => StartBranchKind::Metastable,
            "lower" => StartBranchKind::Lower,
            "upper" => StartBranchKind::Upper,
            v => return Err(type_err("start_branch", v, "metastable | lower | upper")),
        };
        let cfg = RunConfig {
            params,
            engine,
            dim: self.dim("dim", 40)?,
            local_dim: self.dim("local_dim", 30)?,
            dt: self.positive("dt")?,
            t_final: self.positive("t_final")?.unwrap_or(10.0),
            seed: self.u64("seed")?.unwrap_or(0),
            n_traj: self.count("n_traj", 100)?,
            t_m: self.positive("t_m")?.unwrap_or(50.0),
            step: self.positive("step")?.unwrap_or(0.1),
            detuning_range: self.range("detuning_range", (-10.0, 2.0))?,
            record_stride: self.count("record_stride", 10)?,
            recenter_threshold: self.positive("recenter_threshold")?.unwrap_or(0.1),
            radius_fraction: self.f64("radius_fraction")?.unwrap_or(0.35),
            burn_in: self.f64("burn_in")?,
            start: self.pair("start")?.unwrap_or((0.0, 0.0)),
            start_branch,
            x_range: self.range("x_range", (-0.6, -0.005))?,
            y_range: self.range("y_range", (0.0005, 0.05))?,
            grid: self.count("grid", 100)?,
        };
        if !(cfg.radius_fraction > 0.0 && cfg.radius_fraction < 0.5) {
            return Err(invalid("radius_fraction", "must lie in (0, 0.5)"));
        }
        if let Some(b) = cfg.burn_in {
            if !(b >= 0.0) {
                return Err(invalid("burn_in", "must be non-negative"));
            }
        }
        if cfg.grid < 2 {
            return Err(invalid("grid", "need at least 2 points"));
        }
        Ok(cfg)
    }

    fn f64(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|v| parse_f64(key, v))
            .transpose()
    }

    fn positive(&self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        match self.f64(key)? {
            Some(x) if !(x > 0.0) => Err(invalid(key, format!("must be positive, got {x}"))),
            other => Ok(other),
        }
    }

    fn u64(&self, key: &'static str) -> Result<Option<u64>, ConfigError> {
        self.get(key)
            .map(|v| {
                let parsed = match v.strip_prefix("0x") {
                    Some(hex) => u64::from_str_radix(hex, 16).ok(),
                    None => v.parse().ok(),
                };
                parsed.ok_or_else(|| type_err(key, v, "an unsigned 64-bit integer"))
            })
            .transpose()
    }

    fn count(&self, key: &'static str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => match v.parse::<usize>() {
                Ok(0) => Err(invalid(key, "must be at least 1")),
                Ok(n) => Ok(n),
                Err(_) => Err(type_err(key, v, "a positive integer")),
            },
        }
    }

    fn dim(&self, key: &'static str, default: usize) -> Result<FockDim, ConfigError> {
        let n = self.count(key, default)?;
        FockDim::new(n).map_err(|e| invalid(key, e.to_string()))
    }

    fn pair(&self, key: &'static str) -> Result<Option<(f64, f64)>, ConfigError> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(type_err(key, v, "two comma-separated numbers"));
        }
        Ok(Some((parse_f64(key, parts[0])?, parse_f64(key, parts[1])?)))
    }

    fn range(&self, key: &'static str, default: (f64, f64)) -> Result<(f64, f64), ConfigError> {
        let (lo, hi) = self.pair(key)?.unwrap_or(default);
        if !(hi > lo) {
            return Err(invalid(key, format!("need lo < hi, got {lo}, {hi}")));
        }
        Ok((lo, hi))
    }
}

fn check_known(key: &str) -> Result<(), ConfigError> {
    if KEYS.iter().any(|(k, _)| *k == key) {
        Ok(())
    } else {
        Err(ConfigError::UnknownKey { key: key.to_string() })
    }
}

fn parse_f64(key: &'static str, v: &str) -> Result<f64, ConfigError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(type_err(key, v, "a finite number")),
    }
}

fn type_err(key: &'static str, value: &str, expected: &'static str) -> ConfigError {
    ConfigError::Type { key, value: value.to_string(), expected }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

/// Reads an optional file and applies overrides.
pub fn parse_config<S: AsRef<str>>(path: Option<&Path>, overrides: &[S]) -> Result<RunConfig, ConfigError> {
    let mut raw = match path {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    raw.apply_overrides(overrides)?;
    raw.resolve()
}

impl RunConfig {
    /// The fully resolved configuration as `key = value` lines, in a fixed
    /// order, re-parseable by [`RawConfig::parse`].
    pub fn echo(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("kappa", p.kappa.to_string());
        put("drive", p.drive.to_string());
        put("chi", p.chi.to_string());
        put("detuning", p.detuning.to_string());
        put("engine", self.engine.as_str().to_string());
        put("dim", self.dim.get().to_string());
        put("local_dim", self.local_dim.get().to_string());
        if let Some(dt) = self.dt {
            put("dt", dt.to_string());
        }
        put("t_final", self.t_final.to_string());
        put("seed", self.seed.to_string());
        put("n_traj", self.n_traj.to_string());
        put("t_m", self.t_m.to_string());
        put("step", self.step.to_string());
        put("detuning_range", format!("{}, {}", self.detuning_range.0, self.detuning_range.1));
        put("record_stride", self.record_stride.to_string());
        put("recenter_threshold", self.recenter_threshold.to_string());
        put("radius_fraction", self.radius_fraction.to_string());
        if let Some(b) = self.burn_in {
            put("burn_in", b.to_string());
        }
        put("start", format!("{}, {}", self.start.0, self.start.1));
        put("start_branch", self.start_branch.as_str().to_string());
        put("x_range", format!("{}, {}", self.x_range.0, self.x_range.1));
        put("y_range", format!("{}, {}", self.y_range.0, self.y_range.1));
        put("grid", self.grid.to_string());
        s
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(3.0 / self.params.kappa)
    }

    /// Detunings lo, lo + step, … up to hi (rounded to whole steps).
    pub fn detuning_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.detuning_range;
        let k = ((hi - lo) / self.step).round() as usize;
        (0..=k).map(|i| lo + i as f64 * self.step).collect()
    }
}
