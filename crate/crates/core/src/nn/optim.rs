use serde::{Deserialize, Serialize};

use super::tensor::{Param, Real};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Adam with decoupled weight decay and bias correction.
#[derive(Debug, Clone)]
pub struct AdamW<T> {
    pub config: AdamWConfig,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Real> AdamW<T> {
    pub fn new(config: AdamWConfig) -> Self {
        AdamW {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut Param<T>], lr: f64) -> Result<()> {
        if !(lr > 0.0) {
            return Err(Error::Parameter(format!("learning rate must be positive, got {lr}")));
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len()
            || self.first.iter().zip(params.iter()).any(|(s, p)| s.len() != p.len())
        {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }
        self.step += 1;
        let AdamWConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let decay = T::of(1.0 - lr * weight_decay);
        let (b1, b2) = (T::of(beta1), T::of(beta2));
        let (one_b1, one_b2) = (T::of(1.0 - beta1), T::of(1.0 - beta2));
        let step_size = T::of(lr / bc1);
        let inv_sqrt_bc2 = T::of(1.0 / bc2.sqrt());
        let eps = T::of(eps);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            for i in 0..p.value.len() {
                let g = p.grad[i];
                m[i] = b1 * m[i] + one_b1 * g;
                v[i] = b2 * v[i] + one_b2 * g * g;
                let denom = v[i].sqrt() * inv_sqrt_bc2 + eps;
                p.value[i] = p.value[i] * decay - step_size * m[i] / denom;
            }
        }
        Ok(())
    }
}

/// Step schedule: `lr0 * 0.5^floor(epoch / period)`.
pub fn halving_lr(lr0: f64, period: usize, epoch: usize) -> f64 {
    lr0 * 0.5f64.powi((epoch / period.max(1)) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(v: f64, g: f64) -> Param<f64> {
        let mut p = Param::new("p", vec![1], vec![v]);
        p.grad[0] = g;
        p
    }

    #[test]
    fn zero_gradient_without_decay_is_noop() {
        let mut p = param(1.5, 0.0);
        let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.0, ..Default::default() });
        for _ in 0..3 {
            opt.step(&mut [&mut p], 1e-3).unwrap();
        }
        assert_eq!(p.value[0], 1.5);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient() {
        for g in [3.0, -0.02] {
            let mut p = param(0.0, g);
            let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.0, ..Default::default() });
            opt.step(&mut [&mut p], 1e-3).unwrap();
            // m_hat / sqrt(v_hat) = sign(g) up to eps
            assert!((p.value[0] + 1e-3 * g.signum()).abs() < 1e-9);
        }
    }

    #[test]
    fn decoupled_decay() {
        let mut p = param(2.0, 0.0);
        let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.1, ..Default::default() });
        opt.step(&mut [&mut p], 0.01).unwrap();
        assert!((p.value[0] - 2.0 * (1.0 - 0.01 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn schedule_halves_every_period() {
        assert_eq!(halving_lr(1e-3, 2, 0), 1e-3);
        assert_eq!(halving_lr(1e-3, 2, 1), 1e-3);
        assert_eq!(halving_lr(1e-3, 2, 2), 5e-4);
        assert_eq!(halving_lr(1e-3, 2, 3), 5e-4);
        assert_eq!(halving_lr(1e-3, 2, 19), 1e-3 * 0.5f64.powi(9));
    }
}
