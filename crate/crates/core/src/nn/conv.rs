use rand::Rng;

use super::tensor::{Mode, Param, Real, Tensor};
use crate::{Error, Result};

/// Geometry of a square-kernel 2-D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ConvGeometry {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
    pub bias: bool,
}

impl ConvGeometry {
    pub fn validate(&self) -> Result<()> {
        let g = self.groups;
        if g == 0 || self.in_channels % g != 0 || self.out_channels % g != 0 {
            return Err(Error::Parameter(format!(
                "conv {}->{} channels not divisible by {g} groups",
                self.in_channels, self.out_channels
            )));
        }
        if self.kernel == 0 || self.stride == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::Parameter(format!("degenerate convolution {self:?}")));
        }
        Ok(())
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let span = |len: usize| {
            (len + 2 * self.padding)
                .checked_sub(self.kernel)
                .map(|v| v / self.stride + 1)
        };
        match (span(h), span(w)) {
            (Some(ho), Some(wo)) if ho > 0 && wo > 0 => Ok((ho, wo)),
            _ => Err(Error::Shape(format!(
                "{}x{} input admits no {}x{} output position",
                h, w, self.kernel, self.kernel
            ))),
        }
    }

    /// Input channels per group times kernel area.
    pub fn patch_len(&self) -> usize {
        self.in_channels / self.groups * self.kernel * self.kernel
    }

    pub fn weight_shape(&self) -> Vec<usize> {
        vec![
            self.out_channels,
            self.in_channels / self.groups,
            self.kernel,
            self.kernel,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.out_channels * self.patch_len() + if self.bias { self.out_channels } else { 0 }
    }

    fn is_pointwise(&self) -> bool {
        self.kernel == 1 && self.stride == 1 && self.padding == 0
    }
}

/// Kaiming-uniform (fan-in, ReLU gain) weights.
pub(crate) fn kaiming_uniform<T: Real>(rng: &mut impl Rng, fan_in: usize, n: usize) -> Vec<T> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..n)
        .map(|_| T::of(rng.random_range(-bound..bound)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub geometry: ConvGeometry,
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    input: Option<Tensor<T>>,
}

impl<T: Real> Conv2d<T> {
    pub fn new(name: &str, geometry: ConvGeometry, rng: &mut impl Rng) -> Result<Self> {
        geometry.validate()?;
        let fan_in = geometry.patch_len();
        let n = geometry.out_channels * fan_in;
        let weight = Param::new(
            format!("{name}.weight"),
            geometry.weight_shape(),
            kaiming_uniform(rng, fan_in, n),
        );
        let bias = geometry
            .bias
            .then(|| Param::filled(format!("{name}.bias"), vec![geometry.out_channels], T::zero()));
        Ok(Conv2d {
            geometry,
            weight,
            bias,
            input: None,
        })
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        std::iter::once(&mut self.weight)
            .chain(self.bias.as_mut())
            .collect()
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let out = conv2d_forward(
            x,
            &self.weight.value,
            self.bias.as_ref().map(|b| b.value.as_slice()),
            &self.geometry,
        )?;
        if mode == Mode::Train {
            self.input = Some(x.clone());
        }
        Ok(out)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self
            .input
            .take()
            .ok_or_else(|| Error::Shape("conv backward without a training forward".into()))?;
        let grads = conv2d_backward(&x, &self.weight.value, grad, &self.geometry)?;
        for (acc, g) in self.weight.grad.iter_mut().zip(&grads.weight) {
            *acc += *g;
        }
        if let Some(b) = self.bias.as_mut() {
            for (acc, g) in b.grad.iter_mut().zip(&grads.bias) {
                *acc += *g;
            }
        }
        Ok(grads.input)
    }
}

/// Output columns `ox` whose input column `ox * stride + kj - pad` lies in `0..w`.
fn valid_cols(geo: &ConvGeometry, kj: usize, w: usize, wo: usize) -> std::ops::Range<usize> {
    let (s, p) = (geo.stride, geo.padding);
    let lo = p.saturating_sub(kj).div_ceil(s);
    // ox * s + kj - p <= w - 1
    let hi = if w + p > kj { ((w + p - kj - 1) / s + 1).min(wo) } else { 0 };
    lo.min(hi)..hi
}

/// Gathers one group's receptive fields into a `patch_len x (ho*wo)` matrix.
#[allow(clippy::too_many_arguments)]
fn im2col<T: Real>(
    src: &[T],
    channels: usize,
    h: usize,
    w: usize,
    geo: &ConvGeometry,
    ho: usize,
    wo: usize,
    col: &mut [T],
) {
    let k = geo.kernel;
    let (s, p) = (geo.stride, geo.padding);
    let cols = ho * wo;
    for kj in 0..k {
        let valid = valid_cols(geo, kj, w, wo);
        let first = (valid.start * s + kj).wrapping_sub(p);
        for c in 0..channels {
            let plane = &src[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                let row = (c * k + ki) * k + kj;
                let dst = &mut col[row * cols..(row + 1) * cols];
                for oy in 0..ho {
                    let line = &mut dst[oy * wo..(oy + 1) * wo];
                    let iy = (oy * s + ki).wrapping_sub(p);
                    if iy >= h || valid.is_empty() {
                        line.fill(T::zero());
                        continue;
                    }
                    line[..valid.start].fill(T::zero());
                    line[valid.end..].fill(T::zero());
                    let src_row = &plane[iy * w..(iy + 1) * w];
                    let out = &mut line[valid.clone()];
                    if s == 1 {
                        out.copy_from_slice(&src_row[first..first + out.len()]);
                    } else {
                        for (i, v) in out.iter_mut().enumerate() {
                            *v = src_row[first + i * s];
                        }
                    }
                }
            }
        }
    }
}

/// Scatter-adds a column matrix back onto the image it was gathered from.
#[allow(clippy::too_many_arguments)]
fn col2im<T: Real>(
    col: &[T],
    channels: usize,
    h: usize,
    w: usize,
    geo: &ConvGeometry,
    ho: usize,
    wo: usize,
    dst: &mut [T],
) {
    let k = geo.kernel;
    let (s, p) = (geo.stride, geo.padding);
    let cols = ho * wo;
    for kj in 0..k {
        let valid = valid_cols(geo, kj, w, wo);
        if valid.is_empty() {
            continue;
        }
        let first = valid.start * s + kj - p;
        for c in 0..channels {
            let plane = &mut dst[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                let row = (c * k + ki) * k + kj;
                let srow = &col[row * cols..(row + 1) * cols];
                for oy in 0..ho {
                    let iy = (oy * s + ki).wrapping_sub(p);
                    if iy >= h {
                        continue;
                    }
                    let line = &mut plane[iy * w..(iy + 1) * w];
                    let from = &srow[oy * wo + valid.start..oy * wo + valid.end];
                    if s == 1 {
                        for (d, &v) in line[first..first + from.len()].iter_mut().zip(from) {
                            *d += v;
                        }
                    } else {
                        for (i, &v) in from.iter().enumerate() {
                            line[first + i * s] += v;
                        }
                    }
                }
            }
        }
    }
}

/// Cross-correlation with zero padding and channel groups.
pub fn conv2d_forward<T: Real>(
    x: &Tensor<T>,
    weight: &[T],
    bias: Option<&[T]>,
    geo: &ConvGeometry,
) -> Result<Tensor<T>> {
    geo.validate()?;
    let [n, c, h, w] = x.shape();
    if c != geo.in_channels {
        return Err(Error::Shape(format!(
            "conv expects {} input channels, got {c}",
            geo.in_channels
        )));
    }
    if weight.len() != geo.out_channels * geo.patch_len() {
        return Err(Error::Shape("conv weight length mismatch".into()));
    }
    let (ho, wo) = geo.output_hw(h, w)?;
    let cin_g = c / geo.groups;
    let cout_g = geo.out_channels / geo.groups;
    let patch = geo.patch_len();
    let cols = ho * wo;
    let mut out = Tensor::zeros([n, geo.out_channels, ho, wo]);
    let mut col = if geo.is_pointwise() {
        Vec::new()
    } else {
        vec![T::zero(); patch * cols]
    };
    let out_item = geo.out_channels * cols;
    for b in 0..n {
        let xin = x.item(b);
        let dst = &mut out.data_mut()[b * out_item..(b + 1) * out_item];
        for g in 0..geo.groups {
            let src = &xin[g * cin_g * h * w..(g + 1) * cin_g * h * w];
            let colm: &[T] = if geo.is_pointwise() {
                src
            } else {
                im2col(src, cin_g, h, w, geo, ho, wo, &mut col);
                &col
            };
            let wg = &weight[g * cout_g * patch..(g + 1) * cout_g * patch];
            let og = &mut dst[g * cout_g * cols..(g + 1) * cout_g * cols];
            T::gemm(
                cout_g,
                patch,
                cols,
                T::one(),
                wg,
                (patch as isize, 1),
                colm,
                (cols as isize, 1),
                T::zero(),
                og,
                (cols as isize, 1),
            );
        }
        if let Some(bias) = bias {
            for (o, &bv) in bias.iter().enumerate() {
                dst[o * cols..(o + 1) * cols].iter_mut().for_each(|v| *v += bv);
            }
        }
    }
    Ok(out)
}

pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    weight: &[T],
    grad: &Tensor<T>,
    geo: &ConvGeometry,
) -> Result<ConvGrads<T>> {
    let [n, c, h, w] = x.shape();
    let (ho, wo) = geo.output_hw(h, w)?;
    grad.expect_shape("conv output gradient", [n, geo.out_channels, ho, wo])?;
    let cin_g = c / geo.groups;
    let cout_g = geo.out_channels / geo.groups;
    let patch = geo.patch_len();
    let cols = ho * wo;
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = vec![T::zero(); weight.len()];
    let mut db = vec![T::zero(); geo.out_channels];
    let mut col = vec![T::zero(); patch * cols];
    let mut dcol = vec![T::zero(); patch * cols];
    let in_item = c * h * w;
    for b in 0..n {
        let xin = x.item(b);
        let gout = grad.item(b);
        for (o, acc) in db.iter_mut().enumerate() {
            *acc += gout[o * cols..(o + 1) * cols].iter().copied().sum::<T>();
        }
        for g in 0..geo.groups {
            let src = &xin[g * cin_g * h * w..(g + 1) * cin_g * h * w];
            let gg = &gout[g * cout_g * cols..(g + 1) * cout_g * cols];
            let wg = &weight[g * cout_g * patch..(g + 1) * cout_g * patch];
            let colm: &[T] = if geo.is_pointwise() {
                src
            } else {
                im2col(src, cin_g, h, w, geo, ho, wo, &mut col);
                &col
            };
            // dW_g += dY_g * col^T
            T::gemm(
                cout_g,
                cols,
                patch,
                T::one(),
                gg,
                (cols as isize, 1),
                colm,
                (1, cols as isize),
                T::one(),
                &mut dw[g * cout_g * patch..(g + 1) * cout_g * patch],
                (patch as isize, 1),
            );
            let dxg = &mut dx.data_mut()[b * in_item + g * cin_g * h * w..][..cin_g * h * w];
            if geo.is_pointwise() {
                // dX_g = W_g^T * dY_g directly
                T::gemm(
                    patch,
                    cout_g,
                    cols,
                    T::one(),
                    wg,
                    (1, patch as isize),
                    gg,
                    (cols as isize, 1),
                    T::zero(),
                    dxg,
                    (cols as isize, 1),
                );
            } else {
                T::gemm(
                    patch,
                    cout_g,
                    cols,
                    T::one(),
                    wg,
                    (1, patch as isize),
                    gg,
                    (cols as isize, 1),
                    T::zero(),
                    &mut dcol,
                    (cols as isize, 1),
                );
                col2im(&dcol, cin_g, h, w, geo, ho, wo, dxg);
            }
        }
    }
    Ok(ConvGrads {
        input: dx,
        weight: dw,
        bias: db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(cin: usize, cout: usize, k: usize, s: usize, p: usize, g: usize) -> ConvGeometry {
        ConvGeometry {
            in_channels: cin,
            out_channels: cout,
            kernel: k,
            stride: s,
            padding: p,
            groups: g,
            bias: true,
        }
    }

    /// Direct 7-loop definition, independent of im2col/gemm.
    fn naive(x: &Tensor<f64>, w: &[f64], b: &[f64], geo: &ConvGeometry) -> Tensor<f64> {
        let [n, c, h, wd] = x.shape();
        let (ho, wo) = geo.output_hw(h, wd).unwrap();
        let cin_g = c / geo.groups;
        let cout_g = geo.out_channels / geo.groups;
        let k = geo.kernel;
        let mut out = Tensor::zeros([n, geo.out_channels, ho, wo]);
        for bi in 0..n {
            for o in 0..geo.out_channels {
                let g = o / cout_g;
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = b[o];
                        for ci in 0..cin_g {
                            for ki in 0..k {
                                for kj in 0..k {
                                    let iy = (oy * geo.stride + ki) as isize - geo.padding as isize;
                                    let ix = (ox * geo.stride + kj) as isize - geo.padding as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                        continue;
                                    }
                                    let xv = x.data()[((bi * c + g * cin_g + ci) * h + iy as usize) * wd + ix as usize];
                                    acc += w[((o * cin_g + ci) * k + ki) * k + kj] * xv;
                                }
                            }
                        }
                        out.data_mut()[((bi * geo.out_channels + o) * ho + oy) * wo + ox] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_definition() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for g in [geo(4, 6, 3, 1, 1, 2), geo(3, 4, 3, 2, 1, 1), geo(4, 4, 1, 2, 0, 4), geo(2, 2, 5, 1, 0, 1)] {
            let x = Tensor::from_vec([2, g.in_channels, 7, 6], (0..2 * g.in_channels * 42).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let w: Vec<f64> = (0..g.out_channels * g.patch_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..g.out_channels).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = conv2d_forward(&x, &w, Some(&b), &g).unwrap();
            let slow = naive(&x, &w, &b, &g);
            assert_eq!(fast.shape(), slow.shape());
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_kernel() {
        let g = geo(1, 1, 1, 1, 0, 1);
        let x = Tensor::from_vec([1, 1, 2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, 7.0]).unwrap();
        let y = conv2d_forward(&x, &[1.0f64], Some(&[0.0]), &g).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn depthwise_scaling() {
        let g = geo(3, 3, 1, 1, 0, 3);
        let x = Tensor::from_vec([2, 3, 2, 2], (0..24).map(|v| v as f64).collect()).unwrap();
        let y = conv2d_forward(&x, &[2.0; 3], None, &g).unwrap();
        assert_eq!(y, x.map(|v| 2.0 * v));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(geo(3, 4, 3, 1, 1, 2).validate(), Err(Error::Parameter(_))));
        let g = geo(2, 2, 5, 1, 0, 1);
        let x = Tensor::<f64>::zeros([1, 2, 3, 3]);
        assert!(matches!(conv2d_forward(&x, &[0.0; 100], None, &g), Err(Error::Shape(_))));
        let x = Tensor::<f64>::zeros([1, 3, 8, 8]);
        assert!(matches!(conv2d_forward(&x, &[0.0; 100], None, &g), Err(Error::Shape(_))));
    }
}
