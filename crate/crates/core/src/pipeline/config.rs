use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::artifact::sha256_hex;
use crate::models::{build_student, build_teacher, ModelGraph, TeacherConfig, TeacherScale};
use crate::nn::{AdamWConfig, Chw, DistillParams};
use crate::wavelet::{
    build_filter_bank, featurize_stft, featurize_wpd, FeatureTensor, NodeOrder, StftParams, WaveletFamily,
    WaveletFilterBank,
};
use crate::{Error, Result};

/// How a received window becomes a `2 x H x W` input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Featurizer {
    /// Frequency-ordered wavelet packet nodes of I and Q.
    Wpd { basis: WaveletFamily, level: usize },
    /// 512-point Hann STFT at 75% overlap.
    Stft,
}

impl Default for Featurizer {
    fn default() -> Self {
        Featurizer::Wpd {
            basis: WaveletFamily::Daubechies(4),
            level: 5,
        }
    }
}

impl fmt::Display for Featurizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Featurizer::Wpd { basis, level } => write!(f, "wpd-{basis}-L{level}"),
            Featurizer::Stft => f.write_str("stft"),
        }
    }
}

impl Featurizer {
    pub fn prepare(self) -> Result<PreparedFeaturizer> {
        let bank = match self {
            Featurizer::Wpd { basis, level } => {
                if !(1..=10).contains(&level) {
                    return Err(Error::Config(format!("wpd level must be in 1..=10, got {level}")));
                }
                Some(build_filter_bank(basis)?)
            }
            Featurizer::Stft => None,
        };
        Ok(PreparedFeaturizer { kind: self, bank })
    }
}

/// A featurizer with its filter bank built once.
#[derive(Debug, Clone)]
pub struct PreparedFeaturizer {
    pub kind: Featurizer,
    bank: Option<WaveletFilterBank>,
}

impl PreparedFeaturizer {
    pub fn apply(&self, y: &[Complex64]) -> Result<FeatureTensor> {
        match (self.kind, &self.bank) {
            (Featurizer::Wpd { level, .. }, Some(bank)) => featurize_wpd(y, bank, level, NodeOrder::Frequency),
            _ => featurize_stft(y, StftParams::default()),
        }
    }

    /// Feature shape for a window of `len` samples.
    pub fn input_shape(&self, len: usize) -> Result<Chw> {
        match self.kind {
            Featurizer::Wpd { level, .. } => {
                if len % (1 << level) != 0 {
                    return Err(Error::Config(format!("window of {len} samples is not divisible by 2^{level}")));
                }
                Ok([2, len >> level, 1 << level])
            }
            Featurizer::Stft => {
                let p = StftParams::default();
                match p.frame_count(len) {
                    0 => Err(Error::Config(format!("window of {len} samples is shorter than one STFT frame"))),
                    frames => Ok([2, frames, p.fft_size]),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelChoice {
    Teacher { scale: TeacherScale },
    Student { width: usize },
}

impl Default for ModelChoice {
    fn default() -> Self {
        ModelChoice::Student { width: 1 }
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelChoice::Teacher { scale } => write!(f, "teacher@{scale}"),
            ModelChoice::Student { width } => write!(f, "student@{width}"),
        }
    }
}

impl ModelChoice {
    pub fn graph(self, num_classes: usize, input_shape: Chw) -> Result<ModelGraph> {
        let g = match self {
            ModelChoice::Teacher { scale } => build_teacher(
                num_classes,
                TeacherConfig {
                    scale,
                    ..TeacherConfig::default()
                },
            )?,
            ModelChoice::Student { width } => build_student(num_classes, width)?,
        };
        g.with_input(input_shape)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TrainMode {
    /// Cross-entropy on the labels only.
    #[default]
    Plain,
    /// Distillation from a frozen teacher checkpoint.
    Distill { checkpoint: PathBuf, teacher_scale: TeacherScale },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    /// Epochs between learning-rate halvings.
    pub lr_halving_period: usize,
    pub temperature: f64,
    pub alpha: f64,
    /// Scale the distillation term by `temperature^2`.
    #[serde(default)]
    pub t2_scaling: bool,
    #[serde(default)]
    pub optimizer: AdamWConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub featurizer: Featurizer,
    #[serde(default)]
    pub model: ModelChoice,
    #[serde(default)]
    pub mode: TrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 10,
            lr0: 1e-3,
            lr_halving_period: 2,
            temperature: 5.0,
            alpha: 0.5,
            t2_scaling: false,
            optimizer: AdamWConfig::default(),
            seed: 0,
            featurizer: Featurizer::default(),
            model: ModelChoice::default(),
            mode: TrainMode::Plain,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size < 2 || self.lr_halving_period == 0 {
            return Err(Error::Config(
                "epochs and halving period must be positive and batch size at least 2".into(),
            ));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite() && self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("lr0 and temperature must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if let ModelChoice::Student { width: 0 } = self.model {
            return Err(Error::Config("student width must be positive".into()));
        }
        if matches!(self.mode, TrainMode::Distill { .. }) && matches!(self.model, ModelChoice::Teacher { .. }) {
            return Err(Error::Config("distillation trains a student".into()));
        }
        Ok(())
    }

    pub fn distill_params(&self) -> DistillParams {
        DistillParams {
            temperature: self.temperature,
            alpha: self.alpha,
            t2_scaling: self.t2_scaling,
        }
    }
}

/// Hash binding a checkpoint to the dataset and featurizer it was trained on.
pub fn artifact_hash(dataset_hash: &str, featurizer: Featurizer) -> String {
    sha256_hex(format!("{dataset_hash}\n{featurizer}").as_bytes())
}
