//! Synthetic RF spectrogram object-detection toolkit.
//!
//! The crate covers the whole path from radio waveforms to scored detections:
//!
//! - [`iq`]: per-class complex baseband synthesis, SNR calibration, placement
//!   in a 100 MS/s, 50 ms capture and AWGN.
//! - [`scene`]: the randomized dataset protocol (signal-class combinations,
//!   metadata draws, realizations) and the train/test split.
//! - [`spectrogram`]: STFT, dB rendering, bicubic resize to 512x512 and
//!   min-max normalization.
//! - [`dataset`]: boxes from signal metadata, label/prediction text files,
//!   PNG images, manifests and provenance.
//! - [`anchors`]: box geometry statistics, anchor pyramids, IoU match rates
//!   and IoU k-means anchor fitting.
//! - [`baseline`]: a classical energy-threshold detector.
//! - [`eval`]: COCO-style mAP@[.50:.95] and AR@100.
//! - [`config`]: `key = value` run configuration with embedded defaults.
//! - [`pipeline`]: end-to-end workflows used by the `specdet` binary.

pub mod anchors;
pub mod baseline;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod iq;
pub mod pipeline;
pub mod rng;
pub mod scene;
pub mod spectrogram;

pub use error::{Error, Result};

/// Capture sample rate in samples per second.
pub const SAMPLE_RATE_HZ: f64 = 1e8;
/// Capture length in seconds.
pub const CAPTURE_DURATION_S: f64 = 0.05;
/// Number of complex samples in one capture.
pub const CAPTURE_LEN: usize = 5_000_000;
/// Half of the captured band; frequencies span `[-BAND_EDGE_HZ, BAND_EDGE_HZ]`.
pub const BAND_EDGE_HZ: f64 = 5e7;
/// Side length of the square spectrogram images.
pub const IMAGE_SIZE: usize = 512;
