use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{shape_trace, Chw, LayerSpec, Network, Real};
use crate::{Error, Result};

/// Input planes of a 32-node, 128-coefficient WPD feature tensor.
pub const WPD_INPUT: Chw = [2, 128, 32];

/// A named layer sequence with its input shape and class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGraph {
    pub name: String,
    pub layers: Vec<LayerSpec>,
    pub input_shape: Chw,
    pub num_classes: usize,
    /// Named architecture rows, each ending after the given layer index.
    pub rows: Vec<(String, usize)>,
}

impl ModelGraph {
    pub fn new(
        name: impl Into<String>,
        layers: Vec<LayerSpec>,
        input_shape: Chw,
        num_classes: usize,
        rows: Vec<(String, usize)>,
    ) -> Result<Self> {
        let graph = ModelGraph {
            name: name.into(),
            layers,
            input_shape,
            num_classes,
            rows,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn validate(&self) -> Result<()> {
        let out = *self.shape_trace()?.last().unwrap_or(&self.input_shape);
        if out != [self.num_classes, 1, 1] {
            return Err(Error::Shape(format!(
                "{} ends in {out:?}, expected {} classes",
                self.name, self.num_classes
            )));
        }
        if let Some((row, idx)) = self.rows.iter().find(|(_, i)| *i >= self.layers.len()) {
            return Err(Error::Shape(format!("row {row} ends past layer {idx}")));
        }
        Ok(())
    }

    /// Per-example shape after every layer, starting with the input.
    pub fn shape_trace(&self) -> Result<Vec<Chw>> {
        shape_trace(&self.layers, self.input_shape)
    }

    /// Per-example output shape of each named row.
    pub fn row_shapes(&self) -> Result<Vec<(String, Chw)>> {
        let trace = self.shape_trace()?;
        Ok(self
            .rows
            .iter()
            .map(|(name, idx)| (name.clone(), trace[idx + 1]))
            .collect())
    }

    /// The same layers fed a different input shape.
    pub fn with_input(&self, input_shape: Chw) -> Result<Self> {
        let mut g = self.clone();
        g.input_shape = input_shape;
        g.validate()?;
        Ok(g)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    pub fn build<T: Real>(&self, rng: &mut impl Rng) -> Result<Network<T>> {
        Network::build(&self.layers, rng)
    }
}

/// Three `[conv 3x3 -> batch norm -> relu -> max pool (1, 2)]` blocks of
/// widths `32w, 64w, 128w`, global average pooling and a linear classifier.
pub fn build_student(num_classes: usize, width_multiplier: usize) -> Result<ModelGraph> {
    if num_classes < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    if width_multiplier == 0 {
        return Err(Error::Parameter("width multiplier must be positive".into()));
    }
    let mut layers = Vec::new();
    let mut rows = Vec::new();
    let mut channels = WPD_INPUT[0];
    for (i, base) in [32, 64, 128].into_iter().enumerate() {
        let width = base * width_multiplier;
        layers.extend([
            LayerSpec::conv(channels, width, 3, 1, 1, 1, true),
            LayerSpec::BatchNorm { channels: width },
            LayerSpec::Relu,
            LayerSpec::MaxPool { kh: 1, kw: 2 },
        ]);
        rows.push((format!("conv2d-{}", i + 1), layers.len() - 1));
        channels = width;
    }
    layers.extend([LayerSpec::AdaptiveAvgPool, LayerSpec::Flatten]);
    rows.push(("pool".into(), layers.len() - 1));
    layers.push(LayerSpec::Linear {
        in_features: channels,
        out_features: num_classes,
    });
    rows.push(("fc".into(), layers.len() - 1));
    ModelGraph::new("student", layers, WPD_INPUT, num_classes, rows)
}

/// Width reduction of the teacher for desk-scale training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum TeacherScale {
    #[default]
    #[serde(rename = "1")]
    Full,
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "1/4")]
    Quarter,
}

impl TeacherScale {
    pub fn divisor(self) -> usize {
        match self {
            TeacherScale::Full => 1,
            TeacherScale::Half => 2,
            TeacherScale::Quarter => 4,
        }
    }
}

impl fmt::Display for TeacherScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TeacherScale::Full => "1",
            TeacherScale::Half => "1/2",
            TeacherScale::Quarter => "1/4",
        })
    }
}

impl std::str::FromStr for TeacherScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(TeacherScale::Full),
            "1/2" | "0.5" => Ok(TeacherScale::Half),
            "1/4" | "0.25" => Ok(TeacherScale::Quarter),
            other => Err(Error::Parameter(format!(
                "teacher scale must be 1, 1/2 or 1/4, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherConfig {
    /// Bottleneck blocks per stage.
    pub depths: [usize; 4],
    pub base_width: usize,
    pub cardinality: usize,
    /// Divides every width and the cardinality.
    pub scale: TeacherScale,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig {
            depths: [3, 4, 5, 3],
            base_width: 64,
            cardinality: 32,
            scale: TeacherScale::Full,
        }
    }
}

/// Spatial attention on the input, a 3x3 stem, four aggregated-residual
/// stages (the last three halving the resolution in their first block),
/// global average pooling and a linear classifier.
pub fn build_teacher(num_classes: usize, config: TeacherConfig) -> Result<ModelGraph> {
    if num_classes < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    let d = config.scale.divisor();
    if config.base_width % d != 0 || config.cardinality % d != 0 {
        return Err(Error::Parameter(format!(
            "base width {} and cardinality {} must be divisible by {d}",
            config.base_width, config.cardinality
        )));
    }
    let base = config.base_width / d;
    let groups = config.cardinality / d;
    let mut layers = vec![LayerSpec::SpatialAttention { kernel: 7 }];
    let mut rows = vec![("attention".to_string(), 0)];
    layers.extend([
        LayerSpec::conv(WPD_INPUT[0], base, 3, 1, 1, 1, false),
        LayerSpec::BatchNorm { channels: base },
        LayerSpec::Relu,
    ]);
    rows.push(("conv1".into(), layers.len() - 1));
    let mut channels = base;
    for (stage, &blocks) in config.depths.iter().enumerate() {
        if blocks == 0 {
            return Err(Error::Parameter(format!("stage {} has no blocks", stage + 2)));
        }
        let mid = base << stage;
        if mid % groups != 0 {
            return Err(Error::Parameter(format!(
                "cardinality {groups} does not divide width {mid}"
            )));
        }
        for b in 0..blocks {
            let stride = if stage > 0 && b == 0 { 2 } else { 1 };
            layers.push(LayerSpec::ResNeXtBlock {
                in_channels: channels,
                mid_channels: mid,
                out_channels: 2 * mid,
                groups,
                stride,
            });
            channels = 2 * mid;
        }
        rows.push((format!("conv{}", stage + 2), layers.len() - 1));
    }
    layers.extend([LayerSpec::AdaptiveAvgPool, LayerSpec::Flatten]);
    rows.push(("pool".into(), layers.len() - 1));
    layers.push(LayerSpec::Linear {
        in_features: channels,
        out_features: num_classes,
    });
    rows.push(("fc".into(), layers.len() - 1));
    ModelGraph::new("teacher", layers, WPD_INPUT, num_classes, rows)
}
