//! Syllable-type separability toolkit.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`audio`]: mono WAV decode/encode ([`AudioClip`]).
//! 2. [`dsp`]: spectral noise gate, FIR high-pass, slow-down by sample-rate
//!    relabeling and polyphase resampling to the encoder rate.
//! 3. [`cepstral`]: MFCC / LFCC frame features ([`FrameMatrix`]).
//! 4. [`sylf`]: the binary frame-feature exchange format shared with external
//!    encoder exporters.
//! 5. [`dataset`]: syllable annotations, frame pooling and synthetic data.
//! 6. [`separability`]: LDA projection, Mahalanobis silhouettes and
//!    stratified bootstrap confidence intervals.
//! 7. [`plot`]: dependency-free SVG scatter output.

pub mod audio;
pub mod cepstral;
pub mod dataset;
pub mod dsp;
mod error;
pub mod frames;
pub mod plot;
pub mod separability;
pub mod sylf;

pub use audio::AudioClip;
pub use error::{Error, Result};
pub use frames::FrameMatrix;
