//! Dense NCHW tensor engine with layer-wise reverse-mode differentiation.
//!
//! Each layer caches what its backward pass needs during a `Mode::Train`
//! forward; `backward` consumes that cache, accumulates parameter gradients,
//! and returns the gradient w.r.t. the layer input.

mod attention;
mod conv;
mod layers;
mod loss;
mod module;
mod norm;
mod optim;
mod spec;
mod tensor;

pub use attention::SpatialAttention;
pub use conv::{conv2d_backward, conv2d_forward, Conv2d, ConvGeometry, ConvGrads};
pub use layers::{sigmoid, AdaptiveAvgPool, Flatten, Linear, MaxPool2d, Relu, Sigmoid};
pub use loss::{cross_entropy, kd_loss, log_softmax, softened_softmax, DistillParams, LossOutput};
pub use module::{Module, Network, ResNeXtBlock};
pub use norm::{BatchNorm2d, BN_EPS, BN_MOMENTUM};
pub use optim::{halving_lr, AdamW, AdamWConfig};
pub use spec::{shape_trace, Chw, LayerSpec};
pub use tensor::{Mode, Param, Real, Tensor};
