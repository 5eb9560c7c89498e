//! Synthetic FM recordings at surveyed reference points: multi-station FM
//! baseband, location-dependent multipath with day-to-day drift, AWGN, and
//! the on-disk dataset format.

mod channel;
mod dataset;
mod fm;

pub use channel::{
    derive_channel, grid_points, receive, sub_seed, validate_points, ChannelConfig, ChannelModel,
    ReferencePoint, Tap,
};
pub use dataset::{
    generate_dataset, Dataset, DatasetManifest, ExampleEntry, IqRecording, SignalConfig, Split,
    CONFIG_FILE, DAYS, MANIFEST_FILE,
};
pub use fm::{fm_modulate, lowpass_message};
