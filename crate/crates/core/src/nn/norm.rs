use super::tensor::{lane_dot, lane_sq_dev, lane_sum, Mode, Param, Real, Tensor};
use crate::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel batch normalization over (batch, height, width).
///
/// Running statistics follow `running = (1 - momentum) * running + momentum * batch`,
/// with the unbiased batch variance feeding the running variance.
#[derive(Debug, Clone)]
pub struct BatchNorm2d<T> {
    pub channels: usize,
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: f64,
    pub momentum: f64,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    x_hat: Tensor<T>,
    inv_std: Vec<T>,
}

impl<T: Real> BatchNorm2d<T> {
    pub fn new(name: &str, channels: usize) -> Self {
        BatchNorm2d {
            channels,
            gamma: Param::filled(format!("{name}.gamma"), vec![channels], T::one()),
            beta: Param::filled(format!("{name}.beta"), vec![channels], T::zero()),
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
            cache: None,
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        vec![&self.gamma, &self.beta]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.gamma, &mut self.beta]
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let [n, c, h, w] = x.shape();
        if c != self.channels {
            return Err(Error::Shape(format!(
                "batch norm over {} channels got {c}",
                self.channels
            )));
        }
        let hw = h * w;
        let count = n * hw;
        let eps = T::of(self.eps);
        let mut out = Tensor::zeros(x.shape());
        let xd = x.data();
        match mode {
            Mode::Eval => {
                let od = out.data_mut();
                for ch in 0..c {
                    let scale = self.gamma.value[ch] / (self.running_var[ch] + eps).sqrt();
                    let shift = self.beta.value[ch] - self.running_mean[ch] * scale;
                    for b in 0..n {
                        let r = (b * c + ch) * hw..(b * c + ch + 1) * hw;
                        for (o, &v) in od[r.clone()].iter_mut().zip(&xd[r]) {
                            *o = v * scale + shift;
                        }
                    }
                }
            }
            Mode::Train => {
                if n < 2 {
                    return Err(Error::DegenerateBatch(
                        "batch norm needs at least 2 examples in training mode".into(),
                    ));
                }
                let mut x_hat = Tensor::zeros(x.shape());
                let mut inv_std = vec![T::zero(); c];
                let m = T::of(self.momentum);
                let total = T::of(count as f64);
                let od = out.data_mut();
                let hd = x_hat.data_mut();
                for ch in 0..c {
                    let range = |b: usize| (b * c + ch) * hw..(b * c + ch + 1) * hw;
                    let mean = (0..n).map(|b| lane_sum(&xd[range(b)])).sum::<T>() / total;
                    let var = (0..n).map(|b| lane_sq_dev(&xd[range(b)], mean)).sum::<T>() / total;
                    let istd = T::one() / (var + eps).sqrt();
                    inv_std[ch] = istd;
                    let (g, bt) = (self.gamma.value[ch], self.beta.value[ch]);
                    for b in 0..n {
                        let r = range(b);
                        for ((o, h), &v) in od[r.clone()].iter_mut().zip(&mut hd[r.clone()]).zip(&xd[r]) {
                            let xh = (v - mean) * istd;
                            *h = xh;
                            *o = g * xh + bt;
                        }
                    }
                    let unbiased = if count > 1 {
                        var * T::of(count as f64 / (count - 1) as f64)
                    } else {
                        var
                    };
                    self.running_mean[ch] = (T::one() - m) * self.running_mean[ch] + m * mean;
                    self.running_var[ch] = (T::one() - m) * self.running_var[ch] + m * unbiased;
                }
                self.cache = Some(BnCache { x_hat, inv_std });
            }
        }
        Ok(out)
    }

    /// Exact gradient through batch statistics.
    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Shape("batch norm backward without a training forward".into()))?;
        grad.expect_shape("batch norm gradient", cache.x_hat.shape())?;
        let [n, c, h, w] = grad.shape();
        let hw = h * w;
        let count = T::of((n * hw) as f64);
        let mut dx = Tensor::zeros(grad.shape());
        let (gd, hd) = (grad.data(), cache.x_hat.data());
        let dd = dx.data_mut();
        for ch in 0..c {
            let range = |b: usize| (b * c + ch) * hw..(b * c + ch + 1) * hw;
            let sum_g = (0..n).map(|b| lane_sum(&gd[range(b)])).sum::<T>();
            let sum_gx = (0..n).map(|b| lane_dot(&gd[range(b)], &hd[range(b)])).sum::<T>();
            self.beta.grad[ch] += sum_g;
            self.gamma.grad[ch] += sum_gx;
            let k = self.gamma.value[ch] * cache.inv_std[ch] / count;
            for b in 0..n {
                let r = range(b);
                for ((d, &g), &xh) in dd[r.clone()].iter_mut().zip(&gd[r.clone()]).zip(&hd[r]) {
                    *d = k * (count * g - sum_g - xh * sum_gx);
                }
            }
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_batch_statistics() {
        let mut bn = BatchNorm2d::<f64>::new("bn", 2);
        let data: Vec<f64> = (0..2 * 2 * 3 * 3).map(|i| (i as f64 * 1.7).sin() * 3.0 + 1.0).collect();
        let x = Tensor::from_vec([2, 2, 3, 3], data).unwrap();
        let y = bn.forward(&x, Mode::Train).unwrap();
        for ch in 0..2 {
            let vals: Vec<f64> = (0..2)
                .flat_map(|b| y.data()[(b * 2 + ch) * 9..(b * 2 + ch + 1) * 9].to_vec())
                .collect();
            let mean = vals.iter().sum::<f64>() / 18.0;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 18.0;
            assert!(mean.abs() < 1e-5);
            assert!((var - 1.0).abs() < 1e-5, "var {var}");
        }
    }

    #[test]
    fn constant_channel_maps_to_zero() {
        let mut bn = BatchNorm2d::<f32>::new("bn", 1);
        let x = Tensor::from_vec([3, 1, 2, 2], vec![4.0; 12]).unwrap();
        let y = bn.forward(&x, Mode::Train).unwrap();
        assert!(y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_example_rejected_in_training() {
        let mut bn = BatchNorm2d::<f32>::new("bn", 1);
        let x = Tensor::zeros([1, 1, 4, 4]);
        assert!(matches!(bn.forward(&x, Mode::Train), Err(Error::DegenerateBatch(_))));
        assert!(bn.forward(&x, Mode::Eval).is_ok());
    }

    #[test]
    fn running_statistics_update() {
        let mut bn = BatchNorm2d::<f64>::new("bn", 1);
        let x = Tensor::from_vec([2, 1, 1, 2], vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        bn.forward(&x, Mode::Train).unwrap();
        // mean 4, unbiased var 20/3
        assert!((bn.running_mean[0] - 0.4).abs() < 1e-12);
        assert!((bn.running_var[0] - (0.9 + 0.1 * 20.0 / 3.0)).abs() < 1e-12);
    }
}
