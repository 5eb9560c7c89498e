use std::fmt;
use std::str::FromStr;

use super::coefficients as c;
use crate::{Error, Result};

const SUM_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;

/// A wavelet family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WaveletFamily {
    Haar,
    Daubechies(u8),
    Symlets(u8),
    Coiflets(u8),
    Biorthogonal(u8, u8),
    ReverseBior(u8, u8),
}

const BIOR_ORDERS: [(u8, u8); 15] = [
    (1, 1),
    (1, 3),
    (1, 5),
    (2, 2),
    (2, 4),
    (2, 6),
    (2, 8),
    (3, 1),
    (3, 3),
    (3, 5),
    (3, 7),
    (3, 9),
    (4, 4),
    (5, 5),
    (6, 8),
];

impl WaveletFamily {
    /// Every family member with embedded coefficients.
    pub fn all() -> Vec<WaveletFamily> {
        let mut out = vec![WaveletFamily::Haar];
        out.extend((1..=10).map(WaveletFamily::Daubechies));
        out.extend((2..=10).map(WaveletFamily::Symlets));
        out.extend((1..=5).map(WaveletFamily::Coiflets));
        out.extend(BIOR_ORDERS.iter().map(|&(p, q)| WaveletFamily::Biorthogonal(p, q)));
        out.extend(BIOR_ORDERS.iter().map(|&(p, q)| WaveletFamily::ReverseBior(p, q)));
        out
    }

    pub fn is_orthogonal(self) -> bool {
        matches!(
            self,
            WaveletFamily::Haar
                | WaveletFamily::Daubechies(_)
                | WaveletFamily::Symlets(_)
                | WaveletFamily::Coiflets(_)
        )
    }
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WaveletFamily::Haar => write!(f, "haar"),
            WaveletFamily::Daubechies(n) => write!(f, "db{n}"),
            WaveletFamily::Symlets(n) => write!(f, "sym{n}"),
            WaveletFamily::Coiflets(n) => write!(f, "coif{n}"),
            WaveletFamily::Biorthogonal(p, q) => write!(f, "bior{p}.{q}"),
            WaveletFamily::ReverseBior(p, q) => write!(f, "rbio{p}.{q}"),
        }
    }
}

impl TryFrom<String> for WaveletFamily {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WaveletFamily> for String {
    fn from(f: WaveletFamily) -> String {
        f.to_string()
    }
}

impl FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::UnsupportedFamily(s.clone());
        let order = |digits: &str| digits.parse::<u8>().map_err(|_| bad());
        let pair = |digits: &str| -> Result<(u8, u8)> {
            let (p, q) = digits.split_once('.').ok_or_else(bad)?;
            Ok((order(p)?, order(q)?))
        };
        let family = if s == "haar" {
            WaveletFamily::Haar
        } else if let Some(rest) = s.strip_prefix("db") {
            WaveletFamily::Daubechies(order(rest)?)
        } else if let Some(rest) = s.strip_prefix("sym") {
            WaveletFamily::Symlets(order(rest)?)
        } else if let Some(rest) = s.strip_prefix("coif") {
            WaveletFamily::Coiflets(order(rest)?)
        } else if let Some(rest) = s.strip_prefix("bior") {
            let (p, q) = pair(rest)?;
            WaveletFamily::Biorthogonal(p, q)
        } else if let Some(rest) = s.strip_prefix("rbio") {
            let (p, q) = pair(rest)?;
            WaveletFamily::ReverseBior(p, q)
        } else {
            return Err(bad());
        };
        Ok(family)
    }
}

/// Analysis (`h0`, `h1`) and synthesis (`g0`, `g1`) filters for one wavelet.
///
/// Analysis filters are applied as correlations anchored at even indices:
/// `out[m] = sum_k h[k] * x[(2m + k) mod n]`. Synthesis is the matching
/// transpose, `x[(2m + j) mod n] += a[m] * g0[j] + d[m] * g1[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilterBank {
    pub family: WaveletFamily,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
}

fn orthogonal_scaling(family: WaveletFamily) -> Option<&'static [f64]> {
    let h: &'static [f64] = match family {
        WaveletFamily::Haar | WaveletFamily::Daubechies(1) => &c::DB1,
        WaveletFamily::Daubechies(2) => &c::DB2,
        WaveletFamily::Daubechies(3) => &c::DB3,
        WaveletFamily::Daubechies(4) => &c::DB4,
        WaveletFamily::Daubechies(5) => &c::DB5,
        WaveletFamily::Daubechies(6) => &c::DB6,
        WaveletFamily::Daubechies(7) => &c::DB7,
        WaveletFamily::Daubechies(8) => &c::DB8,
        WaveletFamily::Daubechies(9) => &c::DB9,
        WaveletFamily::Daubechies(10) => &c::DB10,
        WaveletFamily::Symlets(2) => &c::SYM2,
        WaveletFamily::Symlets(3) => &c::SYM3,
        WaveletFamily::Symlets(4) => &c::SYM4,
        WaveletFamily::Symlets(5) => &c::SYM5,
        WaveletFamily::Symlets(6) => &c::SYM6,
        WaveletFamily::Symlets(7) => &c::SYM7,
        WaveletFamily::Symlets(8) => &c::SYM8,
        WaveletFamily::Symlets(9) => &c::SYM9,
        WaveletFamily::Symlets(10) => &c::SYM10,
        WaveletFamily::Coiflets(1) => &c::COIF1,
        WaveletFamily::Coiflets(2) => &c::COIF2,
        WaveletFamily::Coiflets(3) => &c::COIF3,
        WaveletFamily::Coiflets(4) => &c::COIF4,
        WaveletFamily::Coiflets(5) => &c::COIF5,
        _ => return None,
    };
    Some(h)
}

/// (decomposition lowpass, reconstruction lowpass) for `bior p.q`.
fn biorthogonal_pair(p: u8, q: u8) -> Option<(&'static [f64], &'static [f64])> {
    let pair: (&'static [f64], &'static [f64]) = match (p, q) {
        (1, 1) => (&c::BIOR1_1_DEC, &c::BIOR1_1_REC),
        (1, 3) => (&c::BIOR1_3_DEC, &c::BIOR1_3_REC),
        (1, 5) => (&c::BIOR1_5_DEC, &c::BIOR1_5_REC),
        (2, 2) => (&c::BIOR2_2_DEC, &c::BIOR2_2_REC),
        (2, 4) => (&c::BIOR2_4_DEC, &c::BIOR2_4_REC),
        (2, 6) => (&c::BIOR2_6_DEC, &c::BIOR2_6_REC),
        (2, 8) => (&c::BIOR2_8_DEC, &c::BIOR2_8_REC),
        (3, 1) => (&c::BIOR3_1_DEC, &c::BIOR3_1_REC),
        (3, 3) => (&c::BIOR3_3_DEC, &c::BIOR3_3_REC),
        (3, 5) => (&c::BIOR3_5_DEC, &c::BIOR3_5_REC),
        (3, 7) => (&c::BIOR3_7_DEC, &c::BIOR3_7_REC),
        (3, 9) => (&c::BIOR3_9_DEC, &c::BIOR3_9_REC),
        (4, 4) => (&c::BIOR4_4_DEC, &c::BIOR4_4_REC),
        (5, 5) => (&c::BIOR5_5_DEC, &c::BIOR5_5_REC),
        (6, 8) => (&c::BIOR6_8_DEC, &c::BIOR6_8_REC),
        _ => return None,
    };
    Some(pair)
}

fn reversed(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

/// Builds the filter bank for `family` and validates it before returning.
pub fn build_filter_bank(family: WaveletFamily) -> Result<WaveletFilterBank> {
    let bank = if let Some(h0) = orthogonal_scaling(family) {
        let n = h0.len();
        // quadrature mirror: h1[k] = (-1)^k h0[n-1-k]
        let h1: Vec<f64> = (0..n)
            .map(|k| if k % 2 == 0 { h0[n - 1 - k] } else { -h0[n - 1 - k] })
            .collect();
        WaveletFilterBank {
            family,
            h0: h0.to_vec(),
            g0: h0.to_vec(),
            g1: h1.clone(),
            h1,
        }
    } else {
        let (dec_lo, rec_lo) = match family {
            WaveletFamily::Biorthogonal(p, q) => biorthogonal_pair(p, q)
                .map(|(d, r)| (d.to_vec(), r.to_vec())),
            // reverse biorthogonal swaps the roles of the two lowpass filters
            WaveletFamily::ReverseBior(p, q) => {
                biorthogonal_pair(p, q).map(|(d, r)| (reversed(r), reversed(d)))
            }
            _ => None,
        }
        .ok_or_else(|| Error::UnsupportedFamily(family.to_string()))?;
        let n = dec_lo.len();
        let dec_hi: Vec<f64> = (0..n)
            .map(|k| if k % 2 == 0 { -rec_lo[k] } else { rec_lo[k] })
            .collect();
        let rec_hi: Vec<f64> = (0..n)
            .map(|k| if k % 2 == 0 { dec_lo[k] } else { -dec_lo[k] })
            .collect();
        WaveletFilterBank {
            family,
            h0: reversed(&dec_lo),
            h1: reversed(&dec_hi),
            g0: rec_lo,
            g1: rec_hi,
        }
    };
    bank.validate()?;
    Ok(bank)
}

impl WaveletFilterBank {
    pub fn len(&self) -> usize {
        self.h0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h0.is_empty()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.family.is_orthogonal()
    }

    /// Worst violation of the filter invariants, per check.
    pub fn invariant_errors(&self) -> FilterInvariantErrors {
        let sqrt2 = std::f64::consts::SQRT_2;
        let lowpass_sum = (self.h0.iter().sum::<f64>() - sqrt2).abs();
        let highpass_sum = self.h1.iter().sum::<f64>().abs();
        let n = self.h0.len();
        let orthonormality = if self.is_orthogonal() {
            (0..n.div_ceil(2))
                .map(|m| {
                    let s: f64 = (0..n - 2 * m).map(|k| self.h0[k] * self.h0[k + 2 * m]).sum();
                    (s - if m == 0 { 1.0 } else { 0.0 }).abs()
                })
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        let quadrature_mirror = if self.is_orthogonal() {
            (0..n)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    (self.h1[k] - sign * self.h0[n - 1 - k]).abs()
                })
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        FilterInvariantErrors {
            lowpass_sum,
            highpass_sum,
            orthonormality,
            quadrature_mirror,
            reconstruction: self.reconstruction_error(),
        }
    }

    /// Max deviation of synthesis∘analysis from the identity on a periodic
    /// grid, probed with every unit impulse.
    fn reconstruction_error(&self) -> f64 {
        let n = 2 * self.h0.len().max(self.g0.len()).max(2);
        let mut worst = 0.0f64;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x.iter_mut().for_each(|v| *v = 0.0);
            x[i] = 1.0;
            let (a, d) = super::packet::split(&x, self);
            let y = super::packet::merge(&a, &d, self);
            for (j, v) in y.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - want).abs());
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let lens = [self.h0.len(), self.h1.len(), self.g0.len(), self.g1.len()];
        if lens.iter().any(|&l| l != lens[0] || l < 2 || l % 2 != 0) {
            return Err(Error::UnsupportedFamily(format!(
                "{}: inconsistent filter lengths {lens:?}",
                self.family
            )));
        }
        let e = self.invariant_errors();
        let sum_ok = (!self.is_orthogonal() || e.lowpass_sum < SUM_TOL) && e.highpass_sum < SUM_TOL;
        let ortho_ok = e.orthonormality < ORTHO_TOL && e.quadrature_mirror < ORTHO_TOL;
        if !(sum_ok && ortho_ok && e.reconstruction < ORTHO_TOL) {
            return Err(Error::UnsupportedFamily(format!(
                "{}: embedded coefficients fail invariant checks ({e:?})",
                self.family
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FilterInvariantErrors {
    pub lowpass_sum: f64,
    pub highpass_sum: f64,
    pub orthonormality: f64,
    pub quadrature_mirror: f64,
    pub reconstruction: f64,
}
