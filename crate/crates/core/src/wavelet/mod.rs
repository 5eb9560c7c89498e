//! Wavelet filter banks, full wavelet packet decomposition, and the I/Q
//! featurizers (WPD and STFT) that feed the networks.

mod coefficients;
mod features;
mod filters;
mod packet;

pub use features::{featurize_stft, featurize_wpd, FeatureTensor, StftParams};
pub use filters::{build_filter_bank, FilterInvariantErrors, WaveletFamily, WaveletFilterBank};
pub use packet::{gray_code, wpd_analyze, wpd_synthesize, NodeOrder, WpdTree};
