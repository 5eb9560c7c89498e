use std::io::{Read, Write};

use num_complex::Complex;
use rustfft::FftPlanner;

use super::filters::WaveletFilterBank;
use super::packet::{wpd_analyze, NodeOrder};
use crate::{Error, Result};

const FEATURE_MAGIC: [u8; 4] = *b"WKFT";

/// Two real planes (I, Q) of shape `height x width`, stored plane-major then
/// row-major. For WPD features rows index coefficients within a node and
/// columns index nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl FeatureTensor {
    pub const PLANES: usize = 2;

    pub fn zeros(height: usize, width: usize) -> Self {
        FeatureTensor {
            height,
            width,
            values: vec![0.0; Self::PLANES * height * width],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (Self::PLANES, self.height, self.width)
    }

    pub fn get(&self, plane: usize, row: usize, col: usize) -> f32 {
        self.values[(plane * self.height + row) * self.width + col]
    }

    pub fn plane(&self, plane: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.values[plane * n..(plane + 1) * n]
    }

    fn set(&mut self, plane: usize, row: usize, col: usize, v: f64) {
        let idx = (plane * self.height + row) * self.width + col;
        self.values[idx] = v as f32;
    }

    /// 16-byte header (magic, planes, height, width as u32 LE) + f32 LE payload.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&FEATURE_MAGIC)?;
        for dim in [Self::PLANES, self.height, self.width] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|e| Error::format("feature tensor", e.to_string()))?;
        if header[..4] != FEATURE_MAGIC {
            return Err(Error::format("feature tensor", "bad magic"));
        }
        let dim = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap()) as usize;
        let (planes, height, width) = (dim(1), dim(2), dim(3));
        if planes != Self::PLANES {
            return Err(Error::format("feature tensor", format!("{planes} planes")));
        }
        let mut payload = vec![0u8; planes * height * width * 4];
        r.read_exact(&mut payload)
            .map_err(|e| Error::format("feature tensor", e.to_string()))?;
        let values = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Ok(FeatureTensor {
            height,
            width,
            values,
        })
    }
}

/// WPD of the I and Q components, one node per column.
pub fn featurize_wpd(
    y: &[Complex<f64>],
    bank: &WaveletFilterBank,
    level: usize,
    order: NodeOrder,
) -> Result<FeatureTensor> {
    let re: Vec<f64> = y.iter().map(|c| c.re).collect();
    let im: Vec<f64> = y.iter().map(|c| c.im).collect();
    let trees = [
        wpd_analyze(&re, bank, level)?.into_order(order),
        wpd_analyze(&im, bank, level)?.into_order(order),
    ];
    let height = trees[0].node_len();
    let width = trees[0].nodes.len();
    let mut out = FeatureTensor::zeros(height, width);
    for (plane, tree) in trees.iter().enumerate() {
        for (col, node) in tree.nodes.iter().enumerate() {
            for (row, &v) in node.iter().enumerate() {
                out.set(plane, row, col, v);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftParams {
    pub fft_size: usize,
    pub overlap: f64,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams {
            fft_size: 512,
            overlap: 0.75,
        }
    }
}

impl StftParams {
    pub fn hop(&self) -> usize {
        ((self.fft_size as f64) * (1.0 - self.overlap)).round() as usize
    }

    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.fft_size {
            0
        } else {
            (len - self.fft_size) / self.hop() + 1
        }
    }
}

/// Periodic Hann window.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Hann-windowed STFT; rows are frames, columns FFT bins. Partial trailing
/// frames are dropped.
pub fn featurize_stft(y: &[Complex<f64>], params: StftParams) -> Result<FeatureTensor> {
    let n = params.fft_size;
    if n == 0 || !(0.0..1.0).contains(&params.overlap) || params.hop() == 0 {
        return Err(Error::Parameter(format!("invalid STFT parameters {params:?}")));
    }
    if y.len() < n {
        return Err(Error::Shape(format!(
            "signal of {} samples is shorter than one {n}-point frame",
            y.len()
        )));
    }
    let frames = params.frame_count(y.len());
    let hop = params.hop();
    let window = hann(n);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut out = FeatureTensor::zeros(frames, n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for frame in 0..frames {
        let start = frame * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = y[start + i] * window[i];
        }
        fft.process(&mut buf);
        for (bin, c) in buf.iter().enumerate() {
            out.set(0, frame, bin, c.re);
            out.set(1, frame, bin, c.im);
        }
    }
    Ok(out)
}
