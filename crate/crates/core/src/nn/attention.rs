use rand::Rng;

use super::conv::{Conv2d, ConvGeometry};
use super::layers::sigmoid;
use super::tensor::{Mode, Param, Real, Tensor};
use crate::{Error, Result};

/// Spatial attention: a `(0, 1)` mask computed from the channel-wise mean and
/// max maps by a `k x k` convolution and a sigmoid, multiplied onto every
/// channel of the input.
#[derive(Debug, Clone)]
pub struct SpatialAttention<T> {
    pub conv: Conv2d<T>,
    cache: Option<AttentionCache<T>>,
}

#[derive(Debug, Clone)]
struct AttentionCache<T> {
    input: Tensor<T>,
    mask: Tensor<T>,
    argmax: Vec<usize>,
}

impl<T: Real> SpatialAttention<T> {
    pub fn geometry(kernel: usize) -> ConvGeometry {
        ConvGeometry {
            in_channels: 2,
            out_channels: 1,
            kernel,
            stride: 1,
            padding: kernel / 2,
            groups: 1,
            bias: true,
        }
    }

    pub fn new(name: &str, kernel: usize, rng: &mut impl Rng) -> Result<Self> {
        if kernel % 2 == 0 {
            return Err(Error::Parameter(format!(
                "attention kernel must be odd, got {kernel}"
            )));
        }
        Ok(SpatialAttention {
            conv: Conv2d::new(&format!("{name}.conv"), Self::geometry(kernel), rng)?,
            cache: None,
        })
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.conv.params()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.conv.params_mut()
    }

    /// The mask alone, shape `[n, 1, h, w]`.
    pub fn mask(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (pooled, _) = channel_pool(x)?;
        Ok(self.conv.forward(&pooled, Mode::Eval)?.map(sigmoid))
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let [n, c, h, w] = x.shape();
        let (pooled, argmax) = channel_pool(x)?;
        let mask = self.conv.forward(&pooled, mode)?.map(sigmoid);
        let hw = h * w;
        let mut out = Tensor::zeros(x.shape());
        for b in 0..n {
            let m = &mask.data()[b * hw..(b + 1) * hw];
            for ch in 0..c {
                let off = (b * c + ch) * hw;
                for i in 0..hw {
                    out.data_mut()[off + i] = x.data()[off + i] * m[i];
                }
            }
        }
        if mode == Mode::Train {
            self.cache = Some(AttentionCache {
                input: x.clone(),
                mask,
                argmax,
            });
        }
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let AttentionCache {
            input,
            mask,
            argmax,
        } = self
            .cache
            .take()
            .ok_or_else(|| Error::Shape("attention backward without a training forward".into()))?;
        grad.expect_shape("attention gradient", input.shape())?;
        let [n, c, h, w] = input.shape();
        let hw = h * w;
        let mut dx = Tensor::zeros(input.shape());
        // gradient w.r.t. the conv pre-activation
        let mut dlogit = Tensor::zeros([n, 1, h, w]);
        for b in 0..n {
            for i in 0..hw {
                let m = mask.data()[b * hw + i];
                let mut dm = T::zero();
                for ch in 0..c {
                    let idx = (b * c + ch) * hw + i;
                    dm += grad.data()[idx] * input.data()[idx];
                    dx.data_mut()[idx] = grad.data()[idx] * m;
                }
                dlogit.data_mut()[b * hw + i] = dm * m * (T::one() - m);
            }
        }
        let dpooled = self.conv.backward(&dlogit)?;
        let inv_c = T::of(1.0 / c as f64);
        for b in 0..n {
            for i in 0..hw {
                let davg = dpooled.data()[(b * 2) * hw + i] * inv_c;
                let dmax = dpooled.data()[(b * 2 + 1) * hw + i];
                for ch in 0..c {
                    dx.data_mut()[(b * c + ch) * hw + i] += davg;
                }
                let winner = argmax[b * hw + i];
                dx.data_mut()[(b * c + winner) * hw + i] += dmax;
            }
        }
        Ok(dx)
    }
}

/// Stacks the channel mean (channel 0) and channel max (channel 1).
fn channel_pool<T: Real>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let [n, c, h, w] = x.shape();
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::Shape(format!("attention over empty input {:?}", x.shape())));
    }
    let hw = h * w;
    let mut pooled = Tensor::zeros([n, 2, h, w]);
    let mut argmax = vec![0usize; n * hw];
    let inv_c = T::of(1.0 / c as f64);
    for b in 0..n {
        for i in 0..hw {
            let mut sum = T::zero();
            let mut best = 0;
            let mut best_v = x.data()[b * c * hw + i];
            for ch in 0..c {
                let v = x.data()[(b * c + ch) * hw + i];
                sum += v;
                if v > best_v {
                    best_v = v;
                    best = ch;
                }
            }
            pooled.data_mut()[(b * 2) * hw + i] = sum * inv_c;
            pooled.data_mut()[(b * 2 + 1) * hw + i] = best_v;
            argmax[b * hw + i] = best;
        }
    }
    Ok((pooled, argmax))
}
