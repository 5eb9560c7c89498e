//! Classification and distillation losses over `[batch, classes]` logits.
//!
//! All losses are means over the batch; gradients are w.r.t. the (student)
//! logits only.

use super::tensor::{Real, Tensor};
use crate::{Error, Result};

/// Temperature softmax with max subtraction.
pub fn softened_softmax<T: Real>(z: &[T], temperature: f64) -> Result<Vec<T>> {
    Ok(log_softmax(z, temperature)?.into_iter().map(T::exp).collect())
}

/// `log softmax(z / temperature)`.
pub fn log_softmax<T: Real>(z: &[T], temperature: f64) -> Result<Vec<T>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Parameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if z.is_empty() || z.iter().any(|v| !v.is_finite()) {
        return Err(Error::RejectedInput("logits must be finite and nonempty".into()));
    }
    let t = T::of(temperature);
    let max = z.iter().copied().fold(T::neg_infinity(), T::max) / t;
    let lse = z.iter().map(|&v| (v / t - max).exp()).sum::<T>().ln();
    Ok(z.iter().map(|&v| v / t - max - lse).collect())
}

#[derive(Debug, Clone)]
pub struct LossOutput<T> {
    pub total: f64,
    pub kl: f64,
    pub ce: f64,
    pub grad: Tensor<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DistillParams {
    pub temperature: f64,
    pub alpha: f64,
    /// Multiply the KL term by `temperature^2`.
    #[serde(default)]
    pub t2_scaling: bool,
}

impl Default for DistillParams {
    fn default() -> Self {
        DistillParams {
            temperature: 5.0,
            alpha: 0.5,
            t2_scaling: false,
        }
    }
}

fn rows<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Result<(usize, usize)> {
    let n = logits.batch();
    let m = logits.item_len();
    if labels.len() != n || n == 0 {
        return Err(Error::Shape(format!(
            "{} labels for a batch of {n}",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= m) {
        return Err(Error::Shape(format!("label {bad} out of range for {m} classes")));
    }
    Ok((n, m))
}

/// Mean cross-entropy of `softmax(logits)` against integer labels.
pub fn cross_entropy<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Result<LossOutput<T>> {
    kd_loss(
        logits,
        None,
        labels,
        DistillParams {
            temperature: 1.0,
            alpha: 0.0,
            t2_scaling: false,
        },
    )
}

/// `alpha * KL(q_teacher(T) || q_student(T)) + (1 - alpha) * CE(q_student(1), labels)`.
///
/// With no teacher the KL term is absent and the loss is pure cross-entropy.
pub fn kd_loss<T: Real>(
    student: &Tensor<T>,
    teacher: Option<&Tensor<T>>,
    labels: &[usize],
    params: DistillParams,
) -> Result<LossOutput<T>> {
    let (n, m) = rows(student, labels)?;
    let DistillParams {
        temperature,
        alpha,
        t2_scaling,
    } = params;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if let Some(t) = teacher {
        t.expect_shape("teacher logits", student.shape())?;
    }
    let kl_weight = if t2_scaling {
        alpha * temperature * temperature
    } else {
        alpha
    };
    let inv_n = T::of(1.0 / n as f64);
    let mut grad = Tensor::zeros(student.shape());
    let (mut kl_sum, mut ce_sum) = (0.0, 0.0);
    for (b, &label) in labels.iter().enumerate() {
        let zs = student.item(b);
        let log_q1 = log_softmax(zs, 1.0)?;
        ce_sum -= log_q1[label].as_f64();
        let row = &mut grad.data_mut()[b * m..(b + 1) * m];
        let ce_w = T::of(if teacher.is_some() { 1.0 - alpha } else { 1.0 });
        for (i, g) in row.iter_mut().enumerate() {
            let hard = if i == label { T::one() } else { T::zero() };
            *g = ce_w * (log_q1[i].exp() - hard) * inv_n;
        }
        if let Some(teacher) = teacher {
            let log_ps = log_softmax(zs, temperature)?;
            let log_pt = log_softmax(teacher.item(b), temperature)?;
            let mut kl = 0.0;
            for i in 0..m {
                let pt = log_pt[i].exp();
                if pt > T::zero() {
                    kl += (pt * (log_pt[i] - log_ps[i])).as_f64();
                }
            }
            kl_sum += kl;
            // d KL / d z_s = (p_s - p_t) / T
            let kw = T::of(kl_weight / temperature);
            for (i, g) in row.iter_mut().enumerate() {
                *g += kw * (log_ps[i].exp() - log_pt[i].exp()) * inv_n;
            }
        }
    }
    let kl = kl_sum / n as f64;
    let ce = ce_sum / n as f64;
    let total = if teacher.is_some() {
        kl_weight * kl + (1.0 - alpha) * ce
    } else {
        ce
    };
    Ok(LossOutput { total, kl, ce, grad })
}
