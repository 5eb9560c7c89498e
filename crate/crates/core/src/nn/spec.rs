use serde::{Deserialize, Serialize};

use super::conv::ConvGeometry;
use crate::{Error, Result};

/// One layer of a model description. Every learnable shape is implied by the
/// variant's fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d(ConvGeometry),
    BatchNorm {
        channels: usize,
    },
    Relu,
    Sigmoid,
    MaxPool {
        kh: usize,
        kw: usize,
    },
    AdaptiveAvgPool,
    Flatten,
    Linear {
        in_features: usize,
        out_features: usize,
    },
    SpatialAttention {
        kernel: usize,
    },
    /// Aggregated-residual bottleneck: 1x1 reduce, grouped 3x3 (carrying the
    /// stride), 1x1 expand, each followed by batch norm; projection shortcut
    /// when the channel count or resolution changes.
    ResNeXtBlock {
        in_channels: usize,
        mid_channels: usize,
        out_channels: usize,
        groups: usize,
        stride: usize,
    },
}

/// Channel, height, width of one example.
pub type Chw = [usize; 3];

impl LayerSpec {
    pub fn conv(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        groups: usize,
        bias: bool,
    ) -> Self {
        LayerSpec::Conv2d(ConvGeometry {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            groups,
            bias,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d(_) => "conv",
            LayerSpec::BatchNorm { .. } => "bn",
            LayerSpec::Relu => "relu",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::AdaptiveAvgPool => "avgpool",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Linear { .. } => "fc",
            LayerSpec::SpatialAttention { .. } => "attention",
            LayerSpec::ResNeXtBlock { .. } => "block",
        }
    }

    /// Sub-layers of a bottleneck block, in evaluation order; the last two
    /// entries form the projection shortcut when present.
    pub fn block_parts(&self) -> Option<(Vec<LayerSpec>, Option<[LayerSpec; 2]>)> {
        let LayerSpec::ResNeXtBlock {
            in_channels,
            mid_channels,
            out_channels,
            groups,
            stride,
        } = *self
        else {
            return None;
        };
        let main = vec![
            LayerSpec::conv(in_channels, mid_channels, 1, 1, 0, 1, false),
            LayerSpec::BatchNorm { channels: mid_channels },
            LayerSpec::Relu,
            LayerSpec::conv(mid_channels, mid_channels, 3, stride, 1, groups, false),
            LayerSpec::BatchNorm { channels: mid_channels },
            LayerSpec::Relu,
            LayerSpec::conv(mid_channels, out_channels, 1, 1, 0, 1, false),
            LayerSpec::BatchNorm { channels: out_channels },
        ];
        let shortcut = (stride != 1 || in_channels != out_channels).then(|| {
            [
                LayerSpec::conv(in_channels, out_channels, 1, stride, 0, 1, false),
                LayerSpec::BatchNorm { channels: out_channels },
            ]
        });
        Some((main, shortcut))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LayerSpec::Conv2d(g) => g.validate(),
            LayerSpec::ResNeXtBlock { stride, .. } => {
                if *stride == 0 {
                    return Err(Error::Parameter("block stride must be >= 1".into()));
                }
                let (main, shortcut) = self.block_parts().unwrap_or_default();
                main.iter().chain(shortcut.iter().flatten()).try_for_each(LayerSpec::validate)
            }
            LayerSpec::SpatialAttention { kernel } if kernel % 2 == 0 => Err(Error::Parameter(
                format!("attention kernel must be odd, got {kernel}"),
            )),
            LayerSpec::MaxPool { kh, kw } if *kh == 0 || *kw == 0 => {
                Err(Error::Parameter("max pool kernel must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Per-example output shape for a per-example input shape.
    pub fn output_shape(&self, input: Chw) -> Result<Chw> {
        let [c, h, w] = input;
        let expect_channels = |want: usize| {
            if c == want {
                Ok(())
            } else {
                Err(Error::Shape(format!(
                    "{} expects {want} channels, got {c}",
                    self.name()
                )))
            }
        };
        match self {
            LayerSpec::Conv2d(g) => {
                expect_channels(g.in_channels)?;
                let (ho, wo) = g.output_hw(h, w)?;
                Ok([g.out_channels, ho, wo])
            }
            LayerSpec::BatchNorm { channels } => {
                expect_channels(*channels)?;
                Ok(input)
            }
            LayerSpec::Relu | LayerSpec::Sigmoid | LayerSpec::SpatialAttention { .. } => Ok(input),
            LayerSpec::MaxPool { kh, kw } => {
                if *kh == 0 || *kw == 0 || h / kh == 0 || w / kw == 0 {
                    return Err(Error::Shape(format!("max pool {kh}x{kw} does not fit {h}x{w}")));
                }
                Ok([c, h / kh, w / kw])
            }
            LayerSpec::AdaptiveAvgPool => Ok([c, 1, 1]),
            LayerSpec::Flatten => Ok([c * h * w, 1, 1]),
            LayerSpec::Linear {
                in_features,
                out_features,
            } => {
                if c * h * w != *in_features {
                    return Err(Error::Shape(format!(
                        "linear expects {in_features} features, got {}",
                        c * h * w
                    )));
                }
                Ok([*out_features, 1, 1])
            }
            LayerSpec::ResNeXtBlock { .. } => {
                let (main, _) = self.block_parts().unwrap_or_default();
                main.iter().try_fold(input, |s, l| l.output_shape(s))
            }
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            LayerSpec::Conv2d(g) => g.param_count(),
            LayerSpec::BatchNorm { channels } => 2 * channels,
            LayerSpec::Linear {
                in_features,
                out_features,
            } => in_features * out_features + out_features,
            LayerSpec::SpatialAttention { kernel } => 2 * kernel * kernel + 1,
            LayerSpec::ResNeXtBlock { .. } => {
                let (main, shortcut) = self.block_parts().unwrap_or_default();
                main.iter()
                    .chain(shortcut.iter().flatten())
                    .map(LayerSpec::param_count)
                    .sum()
            }
            _ => 0,
        }
    }
}

/// Shape after every layer, starting with `input`.
pub fn shape_trace(layers: &[LayerSpec], input: Chw) -> Result<Vec<Chw>> {
    let mut shapes = vec![input];
    for layer in layers {
        layer.validate()?;
        let next = layer.output_shape(*shapes.last().unwrap_or(&input))?;
        shapes.push(next);
    }
    Ok(shapes)
}
