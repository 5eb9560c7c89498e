use std::fmt;

use serde::{Deserialize, Serialize};

use super::graph::ModelGraph;
use crate::nn::{shape_trace, Chw, LayerSpec};
use crate::Result;

/// How a multiply-accumulate is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MacConvention {
    /// One MAC is one FLOP.
    #[default]
    #[serde(rename = "mac1")]
    One,
    /// One MAC is a multiply plus an add.
    #[serde(rename = "mac2")]
    Two,
}

impl MacConvention {
    fn factor(self) -> u64 {
        match self {
            MacConvention::One => 1,
            MacConvention::Two => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerComplexity {
    pub name: String,
    pub output: Chw,
    pub params: usize,
    pub flops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub graph: String,
    pub input_shape: Chw,
    pub convention: MacConvention,
    pub layers: Vec<LayerComplexity>,
    pub total_params: usize,
    pub total_flops: u64,
}

fn elems(s: Chw) -> u64 {
    s.iter().map(|&v| v as u64).product()
}

/// `(macs, element_ops)` for one layer mapping `input` to `output`.
fn layer_cost(layer: &LayerSpec, input: Chw, output: Chw) -> Result<(u64, u64)> {
    Ok(match layer {
        LayerSpec::Conv2d(g) => (g.patch_len() as u64 * elems(output), 0),
        LayerSpec::Linear {
            in_features,
            out_features,
        } => ((in_features * out_features) as u64, 0),
        LayerSpec::BatchNorm { .. } | LayerSpec::Relu | LayerSpec::Sigmoid => (0, elems(output)),
        LayerSpec::MaxPool { .. } | LayerSpec::AdaptiveAvgPool => (0, elems(input)),
        LayerSpec::Flatten => (0, 0),
        LayerSpec::SpatialAttention { kernel } => {
            let [c, h, w] = input;
            let plane = (h * w) as u64;
            let conv = LayerSpec::conv(2, 1, *kernel, 1, kernel / 2, 1, true);
            let (macs, _) = layer_cost(&conv, [2, h, w], [1, h, w])?;
            // channel mean and max, sigmoid, mask product
            (macs, 2 * c as u64 * plane + plane + elems(input))
        }
        LayerSpec::ResNeXtBlock { .. } => {
            let (main, shortcut) = layer.block_parts().unwrap_or_default();
            let mut total = (0, elems(output));
            for part in [main, shortcut.map(Vec::from).unwrap_or_default()] {
                let trace = shape_trace(&part, input)?;
                for (i, l) in part.iter().enumerate() {
                    let (m, e) = layer_cost(l, trace[i], trace[i + 1])?;
                    total.0 += m;
                    total.1 += e;
                }
            }
            total
        }
    })
}

/// Per-layer parameter and FLOP counts of `graph` on `input_shape`.
///
/// Convolutions cost `C_in / groups * k^2` MACs per output element, linear
/// layers `in * out`; normalization, activations and pooling count one
/// operation per element.
pub fn count_complexity(
    graph: &ModelGraph,
    input_shape: Chw,
    convention: MacConvention,
) -> Result<ComplexityReport> {
    let trace = shape_trace(&graph.layers, input_shape)?;
    let mut layers = Vec::with_capacity(graph.layers.len());
    for (i, layer) in graph.layers.iter().enumerate() {
        let (macs, element_ops) = layer_cost(layer, trace[i], trace[i + 1])?;
        layers.push(LayerComplexity {
            name: format!("{i:02}.{}", layer.name()),
            output: trace[i + 1],
            params: layer.param_count(),
            flops: macs * convention.factor() + element_ops,
        });
    }
    Ok(ComplexityReport {
        graph: graph.name.clone(),
        input_shape,
        convention,
        total_params: layers.iter().map(|l| l.params).sum(),
        total_flops: layers.iter().map(|l| l.flops).sum(),
        layers,
    })
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [c, h, w] = self.input_shape;
        let convention = match self.convention {
            MacConvention::One => "MAC=1",
            MacConvention::Two => "MAC=2",
        };
        writeln!(f, "{} on {c}x{h}x{w} ({convention})", self.graph)?;
        writeln!(f, "{:<14} {:>16} {:>12} {:>14}", "layer", "output", "params", "flops")?;
        for l in &self.layers {
            let [c, h, w] = l.output;
            writeln!(
                f,
                "{:<14} {:>16} {:>12} {:>14}",
                l.name,
                format!("{c}x{h}x{w}"),
                l.params,
                l.flops
            )?;
        }
        write!(
            f,
            "total params {} ({:.2}M), flops {} ({:.1}M)",
            self.total_params,
            self.total_params as f64 / 1e6,
            self.total_flops,
            self.total_flops as f64 / 1e6
        )
    }
}
