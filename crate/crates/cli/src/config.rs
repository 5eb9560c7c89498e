use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wkpnet::artifact::sha256_hex;
use wkpnet::models::TeacherScale;
use wkpnet::pipeline::{GridSpec, ModelChoice, TrainConfig};
use wkpnet::signalgen::SignalConfig;
use wkpnet::{Error, Result};

/// Everything a run needs, read from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub paths: Paths,
    pub models: Models,
    pub evaluation: Evaluation,
    pub signal: SignalConfig,
    pub train: TrainConfig,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Dataset directory used when `--data` is absent.
    pub dataset: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            dataset: PathBuf::from("data"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Models {
    pub teacher_scale: TeacherScale,
    pub student_width: usize,
}

impl Default for Models {
    fn default() -> Self {
        Models {
            teacher_scale: TeacherScale::Quarter,
            student_width: 1,
        }
    }
}

impl Models {
    pub fn teacher(&self) -> ModelChoice {
        ModelChoice::Teacher {
            scale: self.teacher_scale,
        }
    }

    pub fn student(&self) -> ModelChoice {
        ModelChoice::Student {
            width: self.student_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Evaluation {
    /// CDF thresholds in meters; empty means the 200-point lattice up to the
    /// largest error.
    pub thresholds: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.train.validate()?;
        self.grid.validate()?;
        if self.models.student_width == 0 {
            return Err(Error::Config("student width must be positive".into()));
        }
        if self.evaluation.thresholds.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Config("thresholds must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialization.
    pub fn content_hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }
}

/// The default configuration with every key, as printed by `--print-schema`.
pub fn schema() -> String {
    let body = RunConfig::default().to_toml().expect("default config serializes");
    format!(
        "# wkpnet run configuration. Every table and key is optional; omitted\n\
         # keys take the values shown. Unknown keys are rejected.\n\
         #\n\
         # [train.featurizer] kind = \"wpd\" (basis, level) or \"stft\".\n\
         # [grid] modes: \"teacher\", \"distill\", \"plain\".\n\
         # teacher_scale: \"1\", \"1/2\" or \"1/4\".\n\n{body}"
    )
}
