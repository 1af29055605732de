//! Run configuration: flat `key = value` text with dotted keys.
//!
//! Angles are radians unless the key is suffixed `_deg`. Defaults carry
//! the standard sensor noise and prior deviations of the estimator; every
//! command writes its fully resolved configuration next to its outputs so
//! a run can be reproduced from the artifacts alone.

use nalgebra::Vector3;
use std::fmt;
use std::path::PathBuf;

use crate::fmt::fmt_g12;
use crate::process::{ProcessNoiseParams, GRAVITY};
use crate::sim::GaitSpec;

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Io(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "config line {line}: {message}"),
            ConfigError::Io(e) => write!(f, "config i/o: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Initial state standard deviations (the prior block).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorStdDevs {
    /// Base and feet position (m).
    pub position: f64,
    /// Base and feet orientation (deg).
    pub orientation_deg: f64,
    /// Base linear velocity (m/s).
    pub velocity: f64,
    /// Accelerometer bias (m/s²).
    pub accel_bias: f64,
    /// Gyroscope bias (rad/s).
    pub gyro_bias: f64,
}

impl Default for PriorStdDevs {
    fn default() -> Self {
        PriorStdDevs {
            position: 0.01,
            orientation_deg: 10.0,
            velocity: 0.5,
            accel_bias: 0.01,
            gyro_bias: 0.002,
        }
    }
}

/// Full configuration of a run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub noise: ProcessNoiseParams,
    /// Joint encoder noise (deg).
    pub encoders_deg: f64,
    pub prior: PriorStdDevs,
    /// Gravity magnitude (m/s²); the gravity vector is `(0, 0, -gravity)`.
    pub gravity: f64,
    /// Default sampling period (s); actual row timestamps take precedence.
    pub dt: f64,
    pub seed: u64,
    /// Chain description file; empty means the bundled reference model.
    pub model: Option<PathBuf>,
    pub dataset_file: Option<PathBuf>,
    pub ground_truth_file: Option<PathBuf>,
    /// Initialize the filter from the first ground-truth row instead of
    /// the kinematic initializer.
    pub init_from_ground_truth: bool,
    /// χ² innovation gate; 0 disables gating.
    pub gate_chi2: f64,
    pub gait: GaitSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            noise: ProcessNoiseParams::default(),
            encoders_deg: 0.1,
            prior: PriorStdDevs::default(),
            gravity: GRAVITY,
            dt: 0.01,
            seed: 42,
            model: None,
            dataset_file: None,
            ground_truth_file: None,
            init_from_ground_truth: false,
            gate_chi2: 0.0,
            gait: GaitSpec::default(),
        }
    }
}

impl RunConfig {
    /// Encoder noise in radians.
    pub fn encoder_std(&self) -> f64 {
        self.encoders_deg.to_radians()
    }

    pub fn gate(&self) -> Option<f64> {
        (self.gate_chi2 > 0.0).then_some(self.gate_chi2)
    }

    /// The gait spec with the shared seed applied.
    pub fn gait_with_seed(&self) -> GaitSpec {
        let mut gait = self.gait.clone();
        gait.seed = self.seed;
        gait
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                message: "expected 'key = value'".into(),
            })?;
            config.apply(key.trim(), value.trim(), line_no)?;
        }
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::Parse { line, message };
        let num = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>()
                .map_err(|_| bad(format!("not a number: '{v}'")))
        };
        let vec3 = |v: &str| -> Result<Vector3<f64>, ConfigError> {
            let parts: Vec<&str> = v.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(bad(format!("expected three numbers, got '{v}'")));
            }
            Ok(Vector3::new(num(parts[0])?, num(parts[1])?, num(parts[2])?))
        };
        let flag = |v: &str| -> Result<bool, ConfigError> {
            match v {
                "true" | "1" => Ok(true),
                "false" | "0" => Ok(false),
                other => Err(bad(format!("expected true/false, got '{other}'"))),
            }
        };

        match key {
            "noise.accel" => self.noise.accel = num(value)?,
            "noise.gyro" => self.noise.gyro = num(value)?,
            "noise.accel_bias" => self.noise.accel_bias = num(value)?,
            "noise.gyro_bias" => self.noise.gyro_bias = num(value)?,
            "noise.contact_foot_linear" => self.noise.contact_foot_linear = num(value)?,
            "noise.contact_foot_angular" => self.noise.contact_foot_angular = num(value)?,
            "noise.swing_inflation" => self.noise.swing_inflation = num(value)?,
            "noise.encoders_deg" => self.encoders_deg = num(value)?,
            "prior.position" => self.prior.position = num(value)?,
            "prior.orientation_deg" => self.prior.orientation_deg = num(value)?,
            "prior.velocity" => self.prior.velocity = num(value)?,
            "prior.accel_bias" => self.prior.accel_bias = num(value)?,
            "prior.gyro_bias" => self.prior.gyro_bias = num(value)?,
            "gravity" => self.gravity = num(value)?,
            "dt" => self.dt = num(value)?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad(format!("not an unsigned integer: '{value}'")))?
            }
            "model" => {
                self.model = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "dataset.file" => {
                self.dataset_file = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "dataset.ground_truth" => {
                self.ground_truth_file = (!value.is_empty()).then(|| PathBuf::from(value));
            }
            "init.from_ground_truth" => self.init_from_ground_truth = flag(value)?,
            "gate.chi2" => self.gate_chi2 = num(value)?,
            "gait.step_length" => self.gait.step_length = num(value)?,
            "gait.step_duration" => self.gait.step_duration = num(value)?,
            "gait.double_support_fraction" => self.gait.double_support_fraction = num(value)?,
            "gait.base_height" => self.gait.base_height = num(value)?,
            "gait.sway_amplitude" => self.gait.sway_amplitude = num(value)?,
            "gait.duration" => self.gait.duration = num(value)?,
            "gait.rate" => self.gait.sample_rate = num(value)?,
            "sim.accel_bias" => self.gait.accel_bias = vec3(value)?,
            "sim.gyro_bias" => self.gait.gyro_bias = vec3(value)?,
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Serializes every field in a fixed order; `parse(serialize(c))`
    /// reproduces `c`.
    pub fn serialize(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let v3 = |v: &Vector3<f64>| format!("{} {} {}", fmt_g12(v.x), fmt_g12(v.y), fmt_g12(v.z));
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("noise.accel", fmt_g12(self.noise.accel));
        push("noise.gyro", fmt_g12(self.noise.gyro));
        push("noise.accel_bias", fmt_g12(self.noise.accel_bias));
        push("noise.gyro_bias", fmt_g12(self.noise.gyro_bias));
        push(
            "noise.contact_foot_linear",
            fmt_g12(self.noise.contact_foot_linear),
        );
        push(
            "noise.contact_foot_angular",
            fmt_g12(self.noise.contact_foot_angular),
        );
        push("noise.swing_inflation", fmt_g12(self.noise.swing_inflation));
        push("noise.encoders_deg", fmt_g12(self.encoders_deg));
        push("prior.position", fmt_g12(self.prior.position));
        push("prior.orientation_deg", fmt_g12(self.prior.orientation_deg));
        push("prior.velocity", fmt_g12(self.prior.velocity));
        push("prior.accel_bias", fmt_g12(self.prior.accel_bias));
        push("prior.gyro_bias", fmt_g12(self.prior.gyro_bias));
        push("gravity", fmt_g12(self.gravity));
        push("dt", fmt_g12(self.dt));
        push("seed", self.seed.to_string());
        push("model", path(&self.model));
        push("dataset.file", path(&self.dataset_file));
        push("dataset.ground_truth", path(&self.ground_truth_file));
        push(
            "init.from_ground_truth",
            self.init_from_ground_truth.to_string(),
        );
        push("gate.chi2", fmt_g12(self.gate_chi2));
        push("gait.step_length", fmt_g12(self.gait.step_length));
        push("gait.step_duration", fmt_g12(self.gait.step_duration));
        push(
            "gait.double_support_fraction",
            fmt_g12(self.gait.double_support_fraction),
        );
        push("gait.base_height", fmt_g12(self.gait.base_height));
        push("gait.sway_amplitude", fmt_g12(self.gait.sway_amplitude));
        push("gait.duration", fmt_g12(self.gait.duration));
        push("gait.rate", fmt_g12(self.gait.sample_rate));
        push("sim.accel_bias", v3(&self.gait.accel_bias));
        push("sim.gyro_bias", v3(&self.gait.gyro_bias));
        out
    }
}
