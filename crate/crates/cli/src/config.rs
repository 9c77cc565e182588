//! Flag structs shared by subcommands, `--config` merging, and the error type
//! that decides the exit code.

use std::fmt;
use std::fs;
use std::path::Path;

use clap::Args;
use oscillab_core::QuadratureConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file, or a spec the library rejects.
    Config(String),
    /// A computation failed after the inputs were accepted.
    Compute(oscillab_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => EXIT_FAIL,
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
        }
    }

    pub fn diagnostic(&self) -> Value {
        let (kind, message) = match self {
            CliError::Config(m) => ("ConfigError", m.clone()),
            CliError::Compute(e) => (e.kind(), e.to_string()),
            CliError::Io(e) => ("IoError", e.to_string()),
        };
        json!({ "status": "error", "kind": kind, "message": message, "exit_code": self.exit_code() })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.diagnostic())
    }
}

impl From<oscillab_core::Error> for CliError {
    fn from(e: oscillab_core::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Input-stage errors from the library count as configuration errors.
pub fn input<T>(r: oscillab_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

/// Overlays the keys of a JSON config file onto parsed flags. An optional
/// `"command"` key must name the running subcommand.
pub fn merge_config<T: Serialize + DeserializeOwned>(args: T, path: Option<&Path>, command: &str) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let overlay: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("malformed config {}: {e}", path.display())))?;
    let Value::Object(overlay) = overlay else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    let mut base = serde_json::to_value(&args).map_err(|e| CliError::Config(e.to_string()))?;
    let map = base.as_object_mut().expect("flag structs serialize to objects");
    for (k, v) in overlay {
        if k == "command" {
            if v.as_str() != Some(command) {
                return Err(CliError::Config(format!("config is for command {v}, not {command:?}")));
            }
            continue;
        }
        let key = k.replace('-', "_");
        if !map.contains_key(&key) {
            return Err(CliError::Config(format!("unknown config key {k:?} for {command}")));
        }
        map.insert(key, v);
    }
    serde_json::from_value(base).map_err(|e| CliError::Config(format!("config does not fit {command}: {e}")))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct QuadArgs {
    /// Accuracy target per shell
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 8)]
    pub panels_per_period: u32,
    #[arg(long, default_value_t = 2000)]
    pub max_shells: u32,
    #[arg(long, default_value_t = 1e-12)]
    pub tail_epsilon: f64,
    #[arg(long, default_value_t = 400_000_000)]
    pub max_nodes: usize,
}

impl QuadArgs {
    pub fn config(&self) -> CliResult<QuadratureConfig> {
        let cfg = QuadratureConfig {
            rel_tol: self.rel_tol,
            panels_per_period: self.panels_per_period,
            max_shells: self.max_shells,
            tail_epsilon: self.tail_epsilon,
            max_nodes: self.max_nodes,
        };
        input(cfg.validate())?;
        Ok(cfg)
    }
}

/// `lo,hi,count` grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(format!("grid {s:?} must be lo,hi,count"));
        };
        let g = GridSpec {
            lo: lo.parse().map_err(|e| format!("grid lo: {e}"))?,
            hi: hi.parse().map_err(|e| format!("grid hi: {e}"))?,
            count: count.parse().map_err(|e| format!("grid count: {e}"))?,
        };
        g.validate()?;
        Ok(g)
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lo > 0.0 && self.hi >= self.lo && self.count >= 1) {
            return Err(format!("grid needs 0 < lo <= hi and count >= 1, got {self:?}"));
        }
        Ok(())
    }

    pub fn points(&self, log_spaced: bool) -> CliResult<Vec<f64>> {
        self.validate().map_err(CliError::Config)?;
        if log_spaced {
            return Ok(oscillab_core::derivlab::log_grid(self.lo, self.hi, self.count));
        }
        if self.count == 1 {
            return Ok(vec![self.lo]);
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| self.lo + step * i as f64).collect())
    }
}

/// Geometric frequency ladder `start * factor^i`, `i < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSpec {
    pub start: f64,
    pub factor: f64,
    pub count: usize,
}

impl std::str::FromStr for LadderSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [start, factor, count] = parts.as_slice() else {
            return Err(format!("ladder {s:?} must be start,factor,count"));
        };
        let l = LadderSpec {
            start: start.parse().map_err(|e| format!("ladder start: {e}"))?,
            factor: factor.parse().map_err(|e| format!("ladder factor: {e}"))?,
            count: count.parse().map_err(|e| format!("ladder count: {e}"))?,
        };
        l.validate()?;
        Ok(l)
    }
}

impl LadderSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.start > 0.0 && self.factor > 1.0 && self.count >= 1) {
            return Err(format!("ladder needs start > 0, factor > 1, count >= 1, got {self:?}"));
        }
        Ok(())
    }

    pub fn points(&self) -> CliResult<Vec<f64>> {
        self.validate().map_err(CliError::Config)?;
        Ok((0..self.count).map(|i| self.start * self.factor.powi(i as i32)).collect())
    }
}

/// Parses a required option after config merging.
pub fn required<T: std::str::FromStr<Err = oscillab_core::Error>>(value: &Option<String>, flag: &str) -> CliResult<T> {
    let raw = value.as_deref().ok_or_else(|| CliError::Config(format!("--{flag} is required")))?;
    input(raw.parse())
}
