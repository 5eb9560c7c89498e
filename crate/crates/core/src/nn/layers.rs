use rand::Rng;

use super::conv::kaiming_uniform;
use super::tensor::{Mode, Param, Real, Tensor};
use crate::{Error, Result};

fn missing(layer: &str) -> Error {
    Error::Shape(format!("{layer} backward without a training forward"))
}

#[derive(Debug, Clone, Default)]
pub struct Relu<T> {
    output: Option<Tensor<T>>,
}

impl<T: Real> Relu<T> {
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let y = x.map(|v| if v > T::zero() { v } else { T::zero() });
        if mode == Mode::Train {
            self.output = Some(y.clone());
        }
        Ok(y)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.output.take().ok_or_else(|| missing("relu"))?;
        grad.expect_shape("relu gradient", y.shape())?;
        let data = grad
            .data()
            .iter()
            .zip(y.data())
            .map(|(&g, &v)| if v > T::zero() { g } else { T::zero() })
            .collect();
        Tensor::from_vec(y.shape(), data)
    }
}

pub fn sigmoid<T: Real>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sigmoid<T> {
    output: Option<Tensor<T>>,
}

impl<T: Real> Sigmoid<T> {
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let y = x.map(sigmoid);
        if mode == Mode::Train {
            self.output = Some(y.clone());
        }
        Ok(y)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.output.take().ok_or_else(|| missing("sigmoid"))?;
        grad.expect_shape("sigmoid gradient", y.shape())?;
        let data = grad
            .data()
            .iter()
            .zip(y.data())
            .map(|(&g, &s)| g * s * (T::one() - s))
            .collect();
        Tensor::from_vec(y.shape(), data)
    }
}

/// Non-overlapping max pooling (stride = kernel, trailing remainder dropped).
/// Ties go to the first position in row-major window order.
#[derive(Debug, Clone)]
pub struct MaxPool2d {
    pub kh: usize,
    pub kw: usize,
    cache: Option<([usize; 4], Vec<usize>)>,
}

impl MaxPool2d {
    pub fn new(kh: usize, kw: usize) -> Self {
        MaxPool2d { kh, kw, cache: None }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (ho, wo) = (h / self.kh.max(1), w / self.kw.max(1));
        if self.kh == 0 || self.kw == 0 || ho == 0 || wo == 0 {
            return Err(Error::Shape(format!(
                "max pool {}x{} does not fit {h}x{w}",
                self.kh, self.kw
            )));
        }
        Ok((ho, wo))
    }

    pub fn forward<T: Real>(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let [n, c, h, w] = x.shape();
        let (ho, wo) = self.output_hw(h, w)?;
        let mut out = Tensor::zeros([n, c, ho, wo]);
        let mut arg = vec![0usize; n * c * ho * wo];
        let od = out.data_mut();
        for plane in 0..n * c {
            let base = plane * h * w;
            let src = &x.data()[base..base + h * w];
            let od = &mut od[plane * ho * wo..(plane + 1) * ho * wo];
            let arg = &mut arg[plane * ho * wo..(plane + 1) * ho * wo];
            if self.kh == 1 && self.kw == 2 {
                for oy in 0..ho {
                    let row = &src[oy * w..oy * w + 2 * wo];
                    let (o, a) = (&mut od[oy * wo..(oy + 1) * wo], &mut arg[oy * wo..(oy + 1) * wo]);
                    for (ox, pair) in row.chunks_exact(2).enumerate() {
                        let second = pair[1] > pair[0];
                        o[ox] = if second { pair[1] } else { pair[0] };
                        a[ox] = base + oy * w + 2 * ox + usize::from(second);
                    }
                }
                continue;
            }
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut best = oy * self.kh * w + ox * self.kw;
                    for dy in 0..self.kh {
                        for dx in 0..self.kw {
                            let idx = (oy * self.kh + dy) * w + ox * self.kw + dx;
                            if src[idx] > src[best] {
                                best = idx;
                            }
                        }
                    }
                    od[oy * wo + ox] = src[best];
                    arg[oy * wo + ox] = base + best;
                }
            }
        }
        if mode == Mode::Train {
            self.cache = Some((x.shape(), arg));
        }
        Ok(out)
    }

    /// Routes each output gradient to the single input that won its window.
    pub fn backward<T: Real>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let (shape, arg) = self.cache.take().ok_or_else(|| missing("max pool"))?;
        if grad.len() != arg.len() {
            return Err(Error::Shape("max pool gradient size mismatch".into()));
        }
        let mut dx = Tensor::zeros(shape);
        let dd = dx.data_mut();
        for (&g, &i) in grad.data().iter().zip(&arg) {
            dd[i] += g;
        }
        Ok(dx)
    }
}

/// Global average pooling to 1x1.
#[derive(Debug, Clone, Default)]
pub struct AdaptiveAvgPool {
    input_shape: Option<[usize; 4]>,
}

impl AdaptiveAvgPool {
    pub fn forward<T: Real>(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let [n, c, h, w] = x.shape();
        let hw = h * w;
        let scale = T::of(1.0 / hw as f64);
        let data = x
            .data()
            .chunks_exact(hw)
            .map(|p| p.iter().copied().sum::<T>() * scale)
            .collect();
        if mode == Mode::Train {
            self.input_shape = Some(x.shape());
        }
        Tensor::from_vec([n, c, 1, 1], data)
    }

    pub fn backward<T: Real>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.input_shape.take().ok_or_else(|| missing("average pool"))?;
        let hw = shape[2] * shape[3];
        grad.expect_shape("average pool gradient", [shape[0], shape[1], 1, 1])?;
        let scale = T::of(1.0 / hw as f64);
        let data = grad
            .data()
            .iter()
            .flat_map(|&g| std::iter::repeat_n(g * scale, hw))
            .collect();
        Tensor::from_vec(shape, data)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Flatten {
    input_shape: Option<[usize; 4]>,
}

impl Flatten {
    pub fn forward<T: Real>(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        if mode == Mode::Train {
            self.input_shape = Some(x.shape());
        }
        let n = x.batch();
        let len = x.item_len();
        x.clone().reshape([n, len, 1, 1])
    }

    pub fn backward<T: Real>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.input_shape.take().ok_or_else(|| missing("flatten"))?;
        grad.clone().reshape(shape)
    }
}

/// `y = x W^T + b` with `W` stored `[out, in]`.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub in_features: usize,
    pub out_features: usize,
    pub weight: Param<T>,
    pub bias: Param<T>,
    input: Option<Tensor<T>>,
}

impl<T: Real> Linear<T> {
    pub fn new(name: &str, in_features: usize, out_features: usize, rng: &mut impl Rng) -> Self {
        Linear {
            in_features,
            out_features,
            weight: Param::new(
                format!("{name}.weight"),
                vec![out_features, in_features],
                kaiming_uniform(rng, in_features, in_features * out_features),
            ),
            bias: Param::filled(format!("{name}.bias"), vec![out_features], T::zero()),
            input: None,
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let n = x.batch();
        if x.item_len() != self.in_features {
            return Err(Error::Shape(format!(
                "linear expects {} features, got {}",
                self.in_features,
                x.item_len()
            )));
        }
        let (i, o) = (self.in_features, self.out_features);
        let mut y = Tensor::zeros([n, o, 1, 1]);
        for row in y.data_mut().chunks_exact_mut(o) {
            row.copy_from_slice(&self.bias.value);
        }
        T::gemm(
            n,
            i,
            o,
            T::one(),
            x.data(),
            (i as isize, 1),
            &self.weight.value,
            (1, i as isize),
            T::one(),
            y.data_mut(),
            (o as isize, 1),
        );
        if mode == Mode::Train {
            self.input = Some(x.clone());
        }
        Ok(y)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.input.take().ok_or_else(|| missing("linear"))?;
        let n = x.batch();
        let (i, o) = (self.in_features, self.out_features);
        if grad.len() != n * o {
            return Err(Error::Shape("linear gradient size mismatch".into()));
        }
        // dW += dY^T X
        T::gemm(
            o,
            n,
            i,
            T::one(),
            grad.data(),
            (1, o as isize),
            x.data(),
            (i as isize, 1),
            T::one(),
            &mut self.weight.grad,
            (i as isize, 1),
        );
        for row in grad.data().chunks_exact(o) {
            for (acc, &g) in self.bias.grad.iter_mut().zip(row) {
                *acc += g;
            }
        }
        let mut dx = Tensor::zeros(x.shape());
        T::gemm(
            n,
            o,
            i,
            T::one(),
            grad.data(),
            (o as isize, 1),
            &self.weight.value,
            (i as isize, 1),
            T::zero(),
            dx.data_mut(),
            (i as isize, 1),
        );
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_and_sigmoid_identities() {
        let x = Tensor::from_vec([1, 1, 1, 4], vec![-2.0f64, -0.0, 0.5, 3.0]).unwrap();
        let y = Relu::default().forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 0.5, 3.0]);
        let s = Sigmoid::default().forward(&x, Mode::Eval).unwrap();
        assert_eq!(s.data()[1], 0.5);
        assert!((sigmoid(-800.0f64)).abs() < 1e-300 && sigmoid(800.0f64) == 1.0);
    }

    #[test]
    fn max_pool_routes_gradient_once() {
        let mut pool = MaxPool2d::new(1, 2);
        let x = Tensor::from_vec([1, 1, 2, 5], vec![1.0f64, 3.0, 2.0, 2.0, 9.0, 4.0, 0.0, -1.0, -5.0, 7.0]).unwrap();
        let y = pool.forward(&x, Mode::Train).unwrap();
        assert_eq!(y.shape(), [1, 1, 2, 2]);
        assert_eq!(y.data(), &[3.0, 2.0, 4.0, -1.0]);
        let g = Tensor::from_vec([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let dx = pool.backward(&g).unwrap();
        assert_eq!(dx.data(), &[0.0, 1.0, 2.0, 0.0, 0.0, 3.0, 0.0, 4.0, 0.0, 0.0]);
        assert_eq!(dx.data().iter().sum::<f64>(), g.data().iter().sum::<f64>());
    }

    #[test]
    fn average_pool_and_flatten() {
        let x = Tensor::from_vec([2, 1, 2, 2], vec![1.0f64, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 8.0]).unwrap();
        let mut pool = AdaptiveAvgPool::default();
        let y = pool.forward(&x, Mode::Train).unwrap();
        assert_eq!(y.data(), &[2.5, 2.0]);
        let mut flat = Flatten::default();
        let f = flat.forward(&x, Mode::Train).unwrap();
        assert_eq!(f.shape(), [2, 4, 1, 1]);
        assert_eq!(flat.backward(&f).unwrap(), x);
    }

    #[test]
    fn linear_definition() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut lin = Linear::<f64>::new("fc", 3, 2, &mut rng);
        lin.weight.value = vec![1.0, 0.0, -1.0, 2.0, 1.0, 0.0];
        lin.bias.value = vec![0.5, -0.5];
        let x = Tensor::from_vec([1, 3, 1, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let y = lin.forward(&x, Mode::Eval).unwrap();
        assert_eq!(y.data(), &[-1.5, 3.5]);
    }
}
