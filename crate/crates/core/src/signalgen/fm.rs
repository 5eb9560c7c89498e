use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// Unit-amplitude FM baseband: the phase advances by
/// `2π (carrier_offset + deviation · message[n]) / sample_rate` per sample,
/// so `out[n] = exp(j(2π f0 n / fs + 2π dev Σ_{i<=n} m[i] / fs))`.
pub fn fm_modulate(
    message: &[f64],
    deviation: f64,
    carrier_offset: f64,
    sample_rate: f64,
) -> Result<Vec<Complex64>> {
    if !(deviation > 0.0 && sample_rate > 0.0 && carrier_offset.abs() < sample_rate / 2.0) {
        return Err(Error::Parameter(format!(
            "fm needs deviation > 0 and |offset| < fs/2 (dev {deviation}, offset {carrier_offset}, fs {sample_rate})"
        )));
    }
    if message.iter().any(|m| !m.is_finite()) {
        return Err(Error::RejectedInput("message contains non-finite samples".into()));
    }
    if let Some(m) = message.iter().find(|m| m.abs() > 1.0) {
        return Err(Error::RejectedInput(format!("message sample {m} outside [-1, 1]")));
    }
    let carrier_step = TAU * carrier_offset / sample_rate;
    let k = TAU * deviation / sample_rate;
    let mut integral = 0.0;
    Ok(message
        .iter()
        .enumerate()
        .map(|(n, &m)| {
            integral = (integral + k * m) % TAU;
            let phase = (carrier_step * n as f64) % TAU + integral;
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

/// Uniform noise through a one-pole lowpass of the given 3 dB bandwidth,
/// scaled to peak magnitude 1.
pub fn lowpass_message(rng: &mut impl Rng, len: usize, bandwidth: f64, sample_rate: f64) -> Vec<f64> {
    let a = (-TAU * bandwidth / sample_rate).exp();
    let mut state = 0.0;
    // settle the filter before the recorded span
    let warmup = ((sample_rate / bandwidth) as usize).min(1 << 16);
    let mut out: Vec<f64> = (0..warmup + len)
        .map(|_| {
            state = a * state + (1.0 - a) * rng.random_range(-1.0..1.0);
            state
        })
        .skip(warmup)
        .collect();
    let peak = out.iter().fold(0.0f64, |p, v| p.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v /= peak);
    }
    out
}
