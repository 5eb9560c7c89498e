//! Confidence-weighted position estimates and positioning-error metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::nn::softened_softmax;
use crate::{Error, Result};

/// Number of thresholds in the fixed CDF lattice.
pub const CDF_LATTICE_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PositionEstimate {
    pub confidences: Vec<f64>,
    pub estimate: (f64, f64),
    pub truth: (f64, f64),
    pub error: f64,
}

/// Softmax (T = 1) of `logits` used as weights on the reference coordinates.
pub fn estimate_position(logits: &[f64], coords: &[(f64, f64)], truth: (f64, f64)) -> Result<PositionEstimate> {
    if logits.len() != coords.len() {
        return Err(Error::Shape(format!(
            "{} logits for {} reference points",
            logits.len(),
            coords.len()
        )));
    }
    let confidences = softened_softmax(logits, 1.0)?;
    let estimate = confidences
        .iter()
        .zip(coords)
        .fold((0.0, 0.0), |(x, y), (p, c)| (x + p * c.0, y + p * c.1));
    let error = ((estimate.0 - truth.0).powi(2) + (estimate.1 - truth.1).powi(2)).sqrt();
    Ok(PositionEstimate {
        confidences,
        estimate,
        truth,
        error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub mde: f64,
    /// Population standard deviation of the errors.
    pub std: f64,
    /// `(threshold, fraction <= threshold)` on the requested thresholds.
    pub cdf: Vec<(f64, f64)>,
    /// Sorted errors paired with their empirical CDF value.
    pub empirical: Vec<(f64, f64)>,
}

/// `CDF_LATTICE_POINTS` evenly spaced thresholds from 0 to `max_error`.
pub fn cdf_lattice(max_error: f64) -> Vec<f64> {
    let n = CDF_LATTICE_POINTS;
    let mut t: Vec<f64> = (0..n).map(|i| max_error * i as f64 / (n - 1) as f64).collect();
    // the endpoint must be exact so the table ends at 1
    t[n - 1] = max_error;
    t
}

fn fraction_within(sorted: &[f64], threshold: f64) -> f64 {
    sorted.partition_point(|&e| e <= threshold) as f64 / sorted.len() as f64
}

/// MDE, STD and CDF of `errors`; `thresholds = None` uses the fixed lattice
/// up to the largest error.
pub fn summarize_errors(errors: &[f64], thresholds: Option<&[f64]>) -> Result<MetricsSummary> {
    if errors.is_empty() {
        return Err(Error::EmptySet("no position estimates to summarize".into()));
    }
    if errors.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::RejectedInput("errors must be finite and non-negative".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mde = sorted.iter().sum::<f64>() / n;
    let std = (sorted.iter().map(|e| (e - mde).powi(2)).sum::<f64>() / n).sqrt();
    let lattice;
    let thresholds = match thresholds {
        Some(t) => t,
        None => {
            lattice = cdf_lattice(*sorted.last().expect("nonempty"));
            &lattice
        }
    };
    let cdf = thresholds.iter().map(|&t| (t, fraction_within(&sorted, t))).collect();
    let empirical = sorted
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, (i + 1) as f64 / n))
        .collect();
    Ok(MetricsSummary { mde, std, cdf, empirical })
}

pub fn summarize(estimates: &[PositionEstimate], thresholds: Option<&[f64]>) -> Result<MetricsSummary> {
    let errors: Vec<f64> = estimates.iter().map(|e| e.error).collect();
    summarize_errors(&errors, thresholds)
}

impl MetricsSummary {
    /// Fraction of errors within `threshold` meters.
    pub fn cdf_at(&self, threshold: f64) -> f64 {
        let sorted: Vec<f64> = self.empirical.iter().map(|p| p.0).collect();
        fraction_within(&sorted, threshold)
    }

    /// `threshold,fraction` rows followed by an `mde,std` summary.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,fraction\n");
        for (t, f) in &self.cdf {
            let _ = writeln!(s, "{t},{f}");
        }
        let _ = writeln!(s, "mde,std\n{},{}", self.mde, self.std);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_weights() {
        let e = estimate_position(&[3f64.ln(), 0.0], &[(0.0, 0.0), (1.0, 0.0)], (0.0, 0.0)).unwrap();
        assert!((e.confidences[0] - 0.75).abs() < 1e-12);
        assert!((e.estimate.0 - 0.25).abs() < 1e-12 && e.estimate.1.abs() < 1e-12);
        assert!((e.error - 0.25).abs() < 1e-12);
    }

    #[test]
    fn saturated_and_uniform() {
        let grid = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let e = estimate_position(&[0.0, 0.0, 100.0, 0.0], &grid, (0.0, 1.0)).unwrap();
        assert!(e.error < 1e-6);
        let e = estimate_position(&[2.0; 4], &grid, (0.0, 0.0)).unwrap();
        assert!((e.estimate.0 - 0.5).abs() < 1e-12 && (e.estimate.1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            estimate_position(&[0.0], &[(0.0, 0.0), (1.0, 1.0)], (0.0, 0.0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn hand_metrics() {
        let s = summarize_errors(&[1.0, 1.0, 1.0], Some(&[1.0])).unwrap();
        assert_eq!((s.mde, s.std, s.cdf[0].1), (1.0, 0.0, 1.0));
        let s = summarize_errors(&[0.0, 2.0], Some(&[1.0, 2.0])).unwrap();
        assert_eq!((s.mde, s.std), (1.0, 1.0));
        assert_eq!(s.cdf, vec![(1.0, 0.5), (2.0, 1.0)]);
        let s = summarize_errors(&[0.0; 4], Some(&[0.0, 3.0])).unwrap();
        assert_eq!((s.mde, s.std, s.cdf[0].1, s.cdf[1].1), (0.0, 0.0, 1.0, 1.0));
        assert!(matches!(summarize_errors(&[], None), Err(Error::EmptySet(_))));
    }

    #[test]
    fn default_lattice_ends_at_one() {
        let s = summarize_errors(&[0.3, 2.5, 1.0], None).unwrap();
        assert_eq!(s.cdf.len(), CDF_LATTICE_POINTS);
        assert_eq!(s.cdf.last().unwrap(), &(2.5, 1.0));
        assert_eq!(s.empirical.last().unwrap().1, 1.0);
        assert!(s.to_csv().ends_with(&format!("mde,std\n{},{}\n", s.mde, s.std)));
    }
}
