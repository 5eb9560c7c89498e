use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A surveyed location; `id` doubles as the class label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub id: usize,
    pub coord: (f64, f64),
}

/// Row-major `rows x cols` lattice with the given spacing, starting at the origin.
pub fn grid_points(rows: usize, cols: usize, spacing: f64) -> Vec<ReferencePoint> {
    (0..rows * cols)
        .map(|id| ReferencePoint {
            id,
            coord: ((id % cols) as f64 * spacing, (id / cols) as f64 * spacing),
        })
        .collect()
}

/// Ids must be `0..M` in order and coordinates finite and pairwise distinct.
pub fn validate_points(points: &[ReferencePoint]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Config("no reference points".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if p.id != i {
            return Err(Error::Config(format!("reference point {i} has id {}", p.id)));
        }
        if !(p.coord.0.is_finite() && p.coord.1.is_finite()) {
            return Err(Error::Config(format!("reference point {i} has a non-finite coordinate")));
        }
        if points[..i].iter().any(|q| q.coord == p.coord) {
            return Err(Error::Config(format!("reference point {i} duplicates a coordinate")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay: usize,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub taps: Vec<Tap>,
    pub day: u32,
    pub seed: u64,
}

impl ChannelModel {
    /// A single unit tap at delay 0.
    pub fn identity() -> Self {
        ChannelModel {
            taps: vec![Tap {
                delay: 0,
                gain: Complex64::new(1.0, 0.0),
            }],
            day: 1,
            seed: 0,
        }
    }

    pub fn power(&self) -> f64 {
        self.taps.iter().map(|t| t.gain.norm_sqr()).sum()
    }
}

/// Multipath statistics. Tap gains mix a spatially smooth field shared by all
/// points (plane waves with the given correlation length) with an
/// independent per-point component, under an exponential power-delay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub min_taps: usize,
    pub max_taps: usize,
    /// Delay of the last possible tap, in samples.
    pub max_delay: usize,
    /// Per-day standard deviation of the gain perturbation.
    pub drift: f64,
    /// Fraction of tap power drawn from the smooth field.
    pub spatial_share: f64,
    pub correlation_length: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            min_taps: 6,
            max_taps: 6,
            max_delay: 30,
            drift: 0.15,
            spatial_share: 0.6,
            correlation_length: 2.0,
        }
    }
}

const FIELD_WAVES: usize = 8;

impl ChannelConfig {
    pub fn validate(&self, window_len: usize) -> Result<()> {
        if self.min_taps == 0 || self.min_taps > self.max_taps {
            return Err(Error::Config(format!(
                "tap count range [{}, {}] is empty",
                self.min_taps, self.max_taps
            )));
        }
        if self.max_delay >= window_len {
            return Err(Error::Config(format!(
                "max delay {} must be shorter than the {window_len}-sample window",
                self.max_delay
            )));
        }
        if self.max_taps > 1 && self.max_delay < self.max_taps - 1 {
            return Err(Error::Config(format!(
                "{} taps do not fit in {} samples of delay",
                self.max_taps, self.max_delay
            )));
        }
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return Err(Error::Config("drift must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.spatial_share) || !(self.correlation_length > 0.0) {
            return Err(Error::Config(
                "spatial share must lie in [0, 1] and correlation length be positive".into(),
            ));
        }
        Ok(())
    }

    /// Delay of tap slot `k`: slots are evenly spaced from 0 to `max_delay`.
    fn slot_delay(&self, k: usize) -> usize {
        if self.max_taps == 1 {
            0
        } else {
            (k * self.max_delay + (self.max_taps - 1) / 2) / (self.max_taps - 1)
        }
    }
}

/// SplitMix64 finalizer over a sequence of words; derives independent seeds
/// for every (purpose, point, day, index) tuple.
pub fn sub_seed(master: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) / std::f64::consts::SQRT_2
}

const TAG_FIELD: u64 = 1;
const TAG_POINT: u64 = 2;
const TAG_DRIFT: u64 = 3;

fn normalize(taps: &mut [Tap]) {
    let p: f64 = taps.iter().map(|t| t.gain.norm_sqr()).sum();
    if p > 0.0 {
        let s = p.sqrt();
        taps.iter_mut().for_each(|t| t.gain /= s);
    }
}

/// Day-`day` channel at `point`, a pure function of its arguments.
pub fn derive_channel(
    point: &ReferencePoint,
    day: u32,
    seed: u64,
    config: &ChannelConfig,
    window_len: usize,
) -> Result<ChannelModel> {
    config.validate(window_len)?;
    if day == 0 {
        return Err(Error::Config("days are numbered from 1".into()));
    }
    let id = point.id as u64;
    let mut point_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &[TAG_POINT, id]));
    let count = point_rng.random_range(config.min_taps..=config.max_taps);
    let kappa = TAU / config.correlation_length;
    let tau = (config.max_delay.max(1) as f64) / 3.0;
    let (sx, sy) = point.coord;
    let mut taps: Vec<Tap> = (0..count)
        .map(|k| {
            let mut field_rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &[TAG_FIELD, k as u64]));
            let field: Complex64 = (0..FIELD_WAVES)
                .map(|_| {
                    let theta = field_rng.random_range(0.0..TAU);
                    let phase = field_rng.random_range(0.0..TAU);
                    let amp = complex_normal(&mut field_rng);
                    amp * Complex64::from_polar(1.0, kappa * (sx * theta.cos() + sy * theta.sin()) + phase)
                })
                .sum::<Complex64>()
                / (FIELD_WAVES as f64).sqrt();
            let own = complex_normal(&mut point_rng);
            let delay = config.slot_delay(k);
            let profile = (-(delay as f64) / tau / 2.0).exp();
            let gain = (config.spatial_share.sqrt() * field
                + (1.0 - config.spatial_share).sqrt() * own)
                * profile;
            Tap { delay, gain }
        })
        .collect();
    normalize(&mut taps);
    if day > 1 && config.drift > 0.0 {
        let sd = config.drift * (day - 1) as f64;
        let normal = Normal::new(0.0, sd).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &[TAG_DRIFT, id, day as u64]));
        for t in &mut taps {
            t.gain += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
        normalize(&mut taps);
    }
    Ok(ChannelModel { taps, day, seed })
}

/// `s` through the channel (truncated to `len(s)`) plus complex white noise
/// at `snr_db` relative to the measured channel-output power. An infinite
/// SNR disables the noise.
pub fn receive(s: &[Complex64], ch: &ChannelModel, snr_db: f64, noise_seed: u64) -> Result<Vec<Complex64>> {
    if s.is_empty() {
        return Err(Error::RejectedInput("empty transmit signal".into()));
    }
    if s.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::RejectedInput("transmit signal contains non-finite samples".into()));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::RejectedInput(format!("snr {snr_db} dB")));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); s.len()];
    for tap in &ch.taps {
        for (n, out) in y.iter_mut().enumerate().skip(tap.delay) {
            *out += tap.gain * s[n - tap.delay];
        }
    }
    if snr_db.is_finite() {
        let power = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
        let noise_power = power / 10f64.powf(snr_db / 10.0);
        let sd = noise_power.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        for v in &mut y {
            *v += complex_normal(&mut rng) * sd;
        }
    }
    Ok(y)
}
