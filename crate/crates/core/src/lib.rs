//! FM-signal fingerprint positioning.
//!
//! Synthetic multipath FM recordings are turned into wavelet packet feature
//! planes, classified by a ResNeXt-style teacher or a compact student network
//! trained by distillation, and converted to coordinates with a
//! confidence-weighted centroid.

pub mod artifact;
mod error;
pub mod locate;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod signalgen;
pub mod wavelet;

pub use error::{Error, Result};
