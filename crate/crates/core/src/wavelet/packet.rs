use super::filters::WaveletFilterBank;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeOrder {
    /// Paley order: child `2n` is the lowpass branch of node `n`.
    Natural,
    /// Gray-code order: adjacent nodes are adjacent subbands.
    #[default]
    Frequency,
}

/// The `2^level` terminal nodes of a full wavelet packet tree.
#[derive(Debug, Clone, PartialEq)]
pub struct WpdTree {
    pub level: usize,
    pub nodes: Vec<Vec<f64>>,
    pub order: NodeOrder,
}

/// Natural index of the node sitting at frequency position `k`.
pub fn gray_code(k: usize) -> usize {
    k ^ (k >> 1)
}

/// One analysis step: periodic correlation with `h0`/`h1`, keeping even phases.
pub(crate) fn split(x: &[f64], bank: &WaveletFilterBank) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut lo = vec![0.0; half];
    let mut hi = vec![0.0; half];
    for m in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (k, (&l, &h)) in bank.h0.iter().zip(&bank.h1).enumerate() {
            let v = x[(2 * m + k) % n];
            a += l * v;
            d += h * v;
        }
        lo[m] = a;
        hi[m] = d;
    }
    (lo, hi)
}

/// Inverse of [`split`] for perfect-reconstruction banks.
pub(crate) fn merge(lo: &[f64], hi: &[f64], bank: &WaveletFilterBank) -> Vec<f64> {
    let n = 2 * lo.len();
    let mut x = vec![0.0; n];
    for (m, (&a, &d)) in lo.iter().zip(hi).enumerate() {
        for (j, (&g0, &g1)) in bank.g0.iter().zip(&bank.g1).enumerate() {
            x[(2 * m + j) % n] += a * g0 + d * g1;
        }
    }
    x
}

/// Full `level`-deep wavelet packet decomposition, nodes in natural order.
pub fn wpd_analyze(x: &[f64], bank: &WaveletFilterBank, level: usize) -> Result<WpdTree> {
    if level == 0 {
        return Err(Error::Parameter("decomposition level must be >= 1".into()));
    }
    let block = 1usize
        .checked_shl(level as u32)
        .filter(|b| *b <= x.len() && x.len() % b == 0)
        .ok_or_else(|| {
            Error::Shape(format!(
                "signal length {} is not divisible by 2^{level}",
                x.len()
            ))
        })?;
    debug_assert!(block >= 2);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::RejectedInput("non-finite sample in WPD input".into()));
    }
    let mut nodes = vec![x.to_vec()];
    for _ in 0..level {
        nodes = nodes
            .iter()
            .flat_map(|node| {
                let (lo, hi) = split(node, bank);
                [lo, hi]
            })
            .collect();
    }
    Ok(WpdTree {
        level,
        nodes,
        order: NodeOrder::Natural,
    })
}

/// Inverts [`wpd_analyze`]; accepts either node ordering.
pub fn wpd_synthesize(tree: &WpdTree, bank: &WaveletFilterBank) -> Result<Vec<f64>> {
    let count = 1usize << tree.level;
    if tree.level == 0 || tree.nodes.len() != count {
        return Err(Error::Shape(format!(
            "expected {count} nodes at level {}, found {}",
            tree.level,
            tree.nodes.len()
        )));
    }
    let len = tree.nodes[0].len();
    if len == 0 || tree.nodes.iter().any(|n| n.len() != len) {
        return Err(Error::Shape("inconsistent WPD node lengths".into()));
    }
    let mut nodes = tree.clone().into_order(NodeOrder::Natural).nodes;
    while nodes.len() > 1 {
        nodes = nodes
            .chunks_exact(2)
            .map(|pair| merge(&pair[0], &pair[1], bank))
            .collect();
    }
    Ok(nodes.pop().unwrap_or_default())
}

impl WpdTree {
    pub fn node_len(&self) -> usize {
        self.nodes.first().map_or(0, Vec::len)
    }

    pub fn energy(&self) -> f64 {
        self.nodes.iter().flatten().map(|v| v * v).sum()
    }

    /// Reorders nodes; a no-op when already in `order`.
    pub fn into_order(mut self, order: NodeOrder) -> WpdTree {
        if self.order == order {
            return self;
        }
        let natural = std::mem::take(&mut self.nodes);
        let mut slots: Vec<Option<Vec<f64>>> = natural.into_iter().map(Some).collect();
        let count = slots.len();
        self.nodes = match order {
            // frequency position k <- natural gray(k)
            NodeOrder::Frequency => (0..count)
                .map(|k| slots[gray_code(k)].take().unwrap_or_default())
                .collect(),
            NodeOrder::Natural => {
                let mut out = vec![Vec::new(); count];
                for (k, slot) in slots.iter_mut().enumerate() {
                    out[gray_code(k)] = slot.take().unwrap_or_default();
                }
                out
            }
        };
        self.order = order;
        self
    }
}
