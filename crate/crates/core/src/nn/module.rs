use rand::Rng;

use super::attention::SpatialAttention;
use super::conv::Conv2d;
use super::layers::{AdaptiveAvgPool, Flatten, Linear, MaxPool2d, Relu, Sigmoid};
use super::norm::BatchNorm2d;
use super::spec::LayerSpec;
use super::tensor::{Mode, Param, Real, Tensor};
use crate::{Error, Result};

/// A constructed layer with its parameters and backward caches.
#[derive(Debug, Clone)]
pub enum Module<T> {
    Conv2d(Conv2d<T>),
    BatchNorm(BatchNorm2d<T>),
    Relu(Relu<T>),
    Sigmoid(Sigmoid<T>),
    MaxPool(MaxPool2d),
    AdaptiveAvgPool(AdaptiveAvgPool),
    Flatten(Flatten),
    Linear(Linear<T>),
    SpatialAttention(SpatialAttention<T>),
    ResNeXtBlock(Box<ResNeXtBlock<T>>),
}

impl<T: Real> Module<T> {
    pub fn build(spec: &LayerSpec, name: &str, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            LayerSpec::Conv2d(g) => Module::Conv2d(Conv2d::new(name, *g, rng)?),
            LayerSpec::BatchNorm { channels } => Module::BatchNorm(BatchNorm2d::new(name, *channels)),
            LayerSpec::Relu => Module::Relu(Relu::default()),
            LayerSpec::Sigmoid => Module::Sigmoid(Sigmoid::default()),
            LayerSpec::MaxPool { kh, kw } => Module::MaxPool(MaxPool2d::new(*kh, *kw)),
            LayerSpec::AdaptiveAvgPool => Module::AdaptiveAvgPool(AdaptiveAvgPool::default()),
            LayerSpec::Flatten => Module::Flatten(Flatten::default()),
            LayerSpec::Linear {
                in_features,
                out_features,
            } => Module::Linear(Linear::new(name, *in_features, *out_features, rng)),
            LayerSpec::SpatialAttention { kernel } => {
                Module::SpatialAttention(SpatialAttention::new(name, *kernel, rng)?)
            }
            LayerSpec::ResNeXtBlock { .. } => {
                Module::ResNeXtBlock(Box::new(ResNeXtBlock::new(spec, name, rng)?))
            }
        })
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let y = match self {
            Module::Conv2d(l) => l.forward(x, mode),
            Module::BatchNorm(l) => l.forward(x, mode),
            Module::Relu(l) => l.forward(x, mode),
            Module::Sigmoid(l) => l.forward(x, mode),
            Module::MaxPool(l) => l.forward(x, mode),
            Module::AdaptiveAvgPool(l) => l.forward(x, mode),
            Module::Flatten(l) => l.forward(x, mode),
            Module::Linear(l) => l.forward(x, mode),
            Module::SpatialAttention(l) => l.forward(x, mode),
            Module::ResNeXtBlock(l) => l.forward(x, mode),
        }?;
        debug_assert!(y.all_finite(), "non-finite activation");
        Ok(y)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let dx = match self {
            Module::Conv2d(l) => l.backward(grad),
            Module::BatchNorm(l) => l.backward(grad),
            Module::Relu(l) => l.backward(grad),
            Module::Sigmoid(l) => l.backward(grad),
            Module::MaxPool(l) => l.backward(grad),
            Module::AdaptiveAvgPool(l) => l.backward(grad),
            Module::Flatten(l) => l.backward(grad),
            Module::Linear(l) => l.backward(grad),
            Module::SpatialAttention(l) => l.backward(grad),
            Module::ResNeXtBlock(l) => l.backward(grad),
        }?;
        debug_assert!(dx.all_finite(), "non-finite gradient");
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        match self {
            Module::Conv2d(l) => l.params(),
            Module::BatchNorm(l) => l.params(),
            Module::Linear(l) => l.params(),
            Module::SpatialAttention(l) => l.params(),
            Module::ResNeXtBlock(l) => l.params(),
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            Module::Conv2d(l) => l.params_mut(),
            Module::BatchNorm(l) => l.params_mut(),
            Module::Linear(l) => l.params_mut(),
            Module::SpatialAttention(l) => l.params_mut(),
            Module::ResNeXtBlock(l) => l.params_mut(),
            _ => Vec::new(),
        }
    }

    /// Batch-norm layers reachable from this module.
    pub fn batch_norms(&self) -> Vec<&BatchNorm2d<T>> {
        match self {
            Module::BatchNorm(bn) => vec![bn],
            Module::ResNeXtBlock(b) => b.layers().filter_map(|m| match m {
                Module::BatchNorm(bn) => Some(bn),
                _ => None,
            })
            .collect(),
            _ => Vec::new(),
        }
    }

    pub fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d<T>> {
        match self {
            Module::BatchNorm(bn) => vec![bn],
            Module::ResNeXtBlock(b) => b
                .layers_mut()
                .filter_map(|m| match m {
                    Module::BatchNorm(bn) => Some(bn),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResNeXtBlock<T> {
    main: Vec<Module<T>>,
    shortcut: Option<Vec<Module<T>>>,
    relu: Relu<T>,
}

impl<T: Real> ResNeXtBlock<T> {
    fn new(spec: &LayerSpec, name: &str, rng: &mut impl Rng) -> Result<Self> {
        let (main, shortcut) = spec
            .block_parts()
            .ok_or_else(|| Error::Parameter("not a bottleneck block spec".into()))?;
        let main = main
            .iter()
            .enumerate()
            .map(|(i, s)| Module::build(s, &format!("{name}.main{i}"), rng))
            .collect::<Result<_>>()?;
        let shortcut = shortcut
            .map(|parts| {
                parts
                    .iter()
                    .enumerate()
                    .map(|(i, s)| Module::build(s, &format!("{name}.short{i}"), rng))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        Ok(ResNeXtBlock {
            main,
            shortcut,
            relu: Relu::default(),
        })
    }

    fn layers(&self) -> impl Iterator<Item = &Module<T>> {
        self.main.iter().chain(self.shortcut.iter().flatten())
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Module<T>> {
        self.main.iter_mut().chain(self.shortcut.iter_mut().flatten())
    }

    fn params(&self) -> Vec<&Param<T>> {
        self.layers().flat_map(Module::params).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers_mut().flat_map(Module::params_mut).collect()
    }

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut y = x.clone();
        for m in &mut self.main {
            y = m.forward(&y, mode)?;
        }
        let identity;
        let skip = match &mut self.shortcut {
            Some(parts) => {
                let mut s = x.clone();
                for m in parts {
                    s = m.forward(&s, mode)?;
                }
                identity = s;
                &identity
            }
            None => x,
        };
        if skip.shape() != y.shape() {
            return Err(Error::Shape(format!(
                "residual branch {:?} does not match shortcut {:?}",
                y.shape(),
                skip.shape()
            )));
        }
        for (a, &b) in y.data_mut().iter_mut().zip(skip.data()) {
            *a += b;
        }
        self.relu.forward(&y, mode)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.relu.backward(grad)?;
        let mut gm = g.clone();
        for m in self.main.iter_mut().rev() {
            gm = m.backward(&gm)?;
        }
        let gs = match &mut self.shortcut {
            Some(parts) => {
                let mut s = g;
                for m in parts.iter_mut().rev() {
                    s = m.backward(&s)?;
                }
                s
            }
            None => g,
        };
        for (a, &b) in gm.data_mut().iter_mut().zip(gs.data()) {
            *a += b;
        }
        Ok(gm)
    }
}

/// A layer sequence built from [`LayerSpec`]s.
#[derive(Debug, Clone)]
pub struct Network<T> {
    pub specs: Vec<LayerSpec>,
    pub modules: Vec<Module<T>>,
}

impl<T: Real> Network<T> {
    pub fn build(specs: &[LayerSpec], rng: &mut impl Rng) -> Result<Self> {
        let modules = specs
            .iter()
            .enumerate()
            .map(|(i, s)| Module::build(s, &format!("{i:02}.{}", s.name()), rng))
            .collect::<Result<_>>()?;
        Ok(Network {
            specs: specs.to_vec(),
            modules,
        })
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut y = self
            .modules
            .first_mut()
            .ok_or_else(|| Error::Shape("empty network".into()))?
            .forward(x, mode)?;
        for m in self.modules.iter_mut().skip(1) {
            y = m.forward(&y, mode)?;
        }
        Ok(y)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = grad.clone();
        for m in self.modules.iter_mut().rev() {
            g = m.backward(&g)?;
        }
        Ok(g)
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.modules.iter().flat_map(Module::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.modules.iter_mut().flat_map(Module::params_mut).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    pub fn batch_norms(&self) -> Vec<&BatchNorm2d<T>> {
        self.modules.iter().flat_map(Module::batch_norms).collect()
    }

    pub fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d<T>> {
        self.modules.iter_mut().flat_map(Module::batch_norms_mut).collect()
    }

    /// Same graph and values in another precision.
    pub fn cast<U: Real>(&self) -> Network<U> {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut out = Network::<U>::build(&self.specs, &mut rng).expect("specs already validated");
        for (dst, src) in out.params_mut().into_iter().zip(self.params()) {
            dst.value = src.value.iter().map(|v| U::of(v.as_f64())).collect();
        }
        for (dst, src) in out.batch_norms_mut().into_iter().zip(self.batch_norms()) {
            dst.running_mean = src.running_mean.iter().map(|v| U::of(v.as_f64())).collect();
            dst.running_var = src.running_var.iter().map(|v| U::of(v.as_f64())).collect();
        }
        out
    }
}
