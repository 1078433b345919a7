//! Experiment configuration: JSON file, command-line overrides, validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::geometry::{exterior_map, CurveGeometry, CurveKind};
use crate::opm::{validate_degrees, OpmOptions};
use crate::Complex64;

/// Fault names accepted by `fault_injection`.
pub const KNOWN_FAULTS: &[&str] = &["poisson_weight"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub geometry: CurveGeometry,
    /// `[re, im]`.
    pub z0: [f64; 2],
    pub degrees: Vec<usize>,
    pub grid_size: usize,
    pub gap_tol: f64,
    pub max_iters: usize,
    pub szego_grid: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Random densities drawn by `szego` and `verify`.
    pub trials: u64,
    /// Level-curve radius for Faber deviations.
    pub faber_radius: f64,
    /// Deliberately corrupts one input of `verify` (see [`KNOWN_FAULTS`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_injection: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let opm = OpmOptions::default();
        ExperimentConfig {
            geometry: CurveGeometry::unit_circle(),
            z0: [2.0, 0.0],
            degrees: (1..=10).collect(),
            grid_size: 512,
            gap_tol: opm.gap_tol,
            max_iters: opm.max_iters,
            szego_grid: 4096,
            seed: 0,
            output_dir: PathBuf::from("out"),
            trials: 200,
            faber_radius: 1.5,
            fault_injection: None,
        }
    }
}

/// A configuration problem, reported with the offending field.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn field<T: serde::de::DeserializeOwned>(name: &str, value: Value) -> Result<T, ConfigError> {
    serde_json::from_value(value).map_err(|e| ConfigError::new(name, e.to_string()))
}

impl ExperimentConfig {
    /// Parses a JSON object; missing keys take their defaults, unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(ConfigError::new("config", "expected a JSON object"));
        };
        Self::from_map(map)
    }

    fn from_map(map: Map<String, Value>) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (key, value) in map {
            match key.as_str() {
                "geometry" => {
                    cfg.geometry = match value {
                        Value::String(s) => parse_geometry(&s)?,
                        other => field("geometry", other)?,
                    }
                }
                "z0" => {
                    cfg.z0 = match value {
                        Value::String(s) => parse_z0(&s)?,
                        other => field("z0", other)?,
                    }
                }
                "degrees" => {
                    cfg.degrees = match value {
                        Value::String(s) => parse_degrees(&s)?,
                        other => field("degrees", other)?,
                    }
                }
                "grid_size" => cfg.grid_size = field(&key, value)?,
                "gap_tol" => cfg.gap_tol = field(&key, value)?,
                "max_iters" => cfg.max_iters = field(&key, value)?,
                "szego_grid" => cfg.szego_grid = field(&key, value)?,
                "seed" => cfg.seed = field(&key, value)?,
                "output_dir" => cfg.output_dir = field(&key, value)?,
                "trials" => cfg.trials = field(&key, value)?,
                "faber_radius" => cfg.faber_radius = field(&key, value)?,
                "fault_injection" => cfg.fault_injection = field(&key, value)?,
                _ => return Err(ConfigError::new(&key, "unknown field")),
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn z0(&self) -> Complex64 {
        Complex64::new(self.z0[0], self.z0[1])
    }

    pub fn opm_options(&self) -> OpmOptions {
        OpmOptions {
            gap_tol: self.gap_tol,
            max_iters: self.max_iters,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_degrees(&self.degrees, self.grid_size).map_err(|e| {
            let name = if self.degrees.is_empty() || self.degrees[0] == 0 || !is_ascending(&self.degrees) {
                "degrees"
            } else {
                "grid_size"
            };
            ConfigError::new(name, e.to_string())
        })?;
        if !(self.gap_tol > 0.0 && self.gap_tol <= 1e-2) {
            return Err(ConfigError::new("gap_tol", format!("{} is outside (0, 1e-2]", self.gap_tol)));
        }
        if self.max_iters == 0 {
            return Err(ConfigError::new("max_iters", "must be at least 1"));
        }
        if self.szego_grid < 16 {
            return Err(ConfigError::new("szego_grid", "must be at least 16"));
        }
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        if !(self.faber_radius > 1.0 && self.faber_radius.is_finite()) {
            return Err(ConfigError::new("faber_radius", "must be a finite number above 1"));
        }
        if let Some(fault) = &self.fault_injection {
            if !KNOWN_FAULTS.contains(&fault.as_str()) {
                return Err(ConfigError::new(
                    "fault_injection",
                    format!("unknown fault `{fault}`, expected one of {KNOWN_FAULTS:?}"),
                ));
            }
        }
        let z0 = self.z0();
        if !(z0.re.is_finite() && z0.im.is_finite()) {
            return Err(ConfigError::new("z0", "must be finite"));
        }
        match exterior_map(&self.geometry, z0) {
            Ok(w) if w.norm() > 1.0 + 1e-9 => Ok(()),
            Ok(w) => Err(ConfigError::new(
                "z0",
                format!("{} + {}i is not exterior to the set (|Phi(z0)| = {})", z0.re, z0.im, w.norm()),
            )),
            Err(e) => Err(ConfigError::new("z0", e.to_string())),
        }
    }
}

fn is_ascending(d: &[usize]) -> bool {
    d.windows(2).all(|p| p[0] < p[1])
}

/// `circle`, `interval`, `ellipse:A,B`, or a JSON geometry object.
pub fn parse_geometry(s: &str) -> Result<CurveGeometry, ConfigError> {
    let s = s.trim();
    let err = |m: String| ConfigError::new("geometry", m);
    if s.starts_with('{') {
        return serde_json::from_str(s).map_err(|e| err(e.to_string()));
    }
    let kind = match s {
        "circle" | "unit_circle" => CurveKind::UnitCircle,
        "interval" => CurveKind::Interval,
        _ => {
            let Some(rest) = s.strip_prefix("ellipse:") else {
                return Err(err(format!(
                    "unrecognized `{s}`; expected circle, interval, ellipse:A,B or a JSON object"
                )));
            };
            let parts: Vec<&str> = rest.split(',').collect();
            let nums: Vec<f64> = parts
                .iter()
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(format!("ellipse axes `{rest}`: {e}")))?;
            if nums.len() != 2 {
                return Err(err(format!("ellipse needs two semi-axes, got `{rest}`")));
            }
            CurveKind::Ellipse {
                a: nums[0],
                b: nums[1],
            }
        }
    };
    CurveGeometry::new(kind).map_err(|e| err(e.to_string()))
}

/// `"re,im"`.
pub fn parse_z0(s: &str) -> Result<[f64; 2], ConfigError> {
    let err = |m: String| ConfigError::new("z0", m);
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(err(format!("expected \"re,im\", got `{s}`")));
    }
    let re = parts[0].trim().parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")))?;
    let im = parts[1].trim().parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")))?;
    Ok([re, im])
}

/// `"a..b"` or `"a..b:step"` (inclusive), or a comma-separated list.
pub fn parse_degrees(s: &str) -> Result<Vec<usize>, ConfigError> {
    let err = |m: String| ConfigError::new("degrees", m);
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| err(format!("`{t}` in `{s}`: {e}")))
    };
    if let Some((a, rest)) = s.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, step)) => (num(b)?, num(step)?),
            None => (num(rest)?, 1),
        };
        let a = num(a)?;
        if step == 0 {
            return Err(err("step must be positive".to_string()));
        }
        if a > b {
            return Err(err(format!("empty range `{s}`")));
        }
        return Ok((a..=b).step_by(step).collect());
    }
    s.split(',').map(num).collect()
}
