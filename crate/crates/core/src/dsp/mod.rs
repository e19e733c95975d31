//! Preprocessing of ultrasonic field recordings.
//!
//! The stages run in a fixed order: spectral noise gate, high-pass at the
//! original-timeline cutoff, slow-down by sample-rate relabeling, then
//! resampling to the encoder rate. Relabeling keeps every sample and divides
//! the nominal rate, so duration grows and every frequency drops by the
//! stretch factor: a 20 kHz component ends up at 2.5 kHz after an 8x
//! slow-down.

pub mod fir;
pub mod gate;
pub mod resample;
pub mod window;

pub use fir::highpass;
pub use gate::{noise_gate, GateOutput};
pub use resample::resample;

use crate::audio::AudioClip;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    /// Gate threshold in dBFS.
    pub noise_threshold_db: f64,
    /// Attenuation applied to gated bins, in dB.
    pub noise_reduction_db: f64,
    /// High-pass cutoff on the original (un-stretched) timeline.
    pub highpass_cutoff_hz: f64,
    pub stretch_factor: u32,
    pub target_rate_hz: u32,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            noise_threshold_db: -65.0,
            noise_reduction_db: 90.0,
            highpass_cutoff_hz: 10_000.0,
            stretch_factor: 8,
            target_rate_hz: 16_000,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-120.0..=0.0).contains(&self.noise_threshold_db) {
            return Err(Error::param(
                "noise_threshold_db",
                format!("{} is outside [-120, 0] dBFS", self.noise_threshold_db),
            ));
        }
        if !(self.noise_reduction_db.is_finite() && self.noise_reduction_db >= 0.0) {
            return Err(Error::param("noise_reduction_db", "must be nonnegative"));
        }
        if !(self.highpass_cutoff_hz.is_finite() && self.highpass_cutoff_hz > 0.0) {
            return Err(Error::param("highpass_cutoff_hz", "must be positive"));
        }
        if self.stretch_factor == 0 {
            return Err(Error::param("stretch_factor", "must be at least 1"));
        }
        if self.target_rate_hz < 8000 {
            return Err(Error::param(
                "target_rate_hz",
                format!("{} Hz is below the 8000 Hz minimum", self.target_rate_hz),
            ));
        }
        Ok(())
    }
}

/// Slows a clip down by reinterpreting its sample rate as `rate / factor`.
pub fn stretch_relabel(clip: &AudioClip, factor: u32) -> Result<AudioClip> {
    if factor == 0 {
        return Err(Error::param("stretch_factor", "must be at least 1"));
    }
    let rate = clip.sample_rate_hz();
    if !rate.is_multiple_of(factor) {
        return Err(Error::param(
            "stretch_factor",
            format!("sample rate {rate} Hz is not divisible by {factor}"),
        ));
    }
    Ok(clip.clone().with_rate(rate / factor))
}

pub fn preprocess_pipeline(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<AudioClip> {
    cfg.validate()?;
    let gated = noise_gate(clip, cfg.noise_threshold_db, cfg.noise_reduction_db)?;
    let filtered = highpass(&gated.clip, cfg.highpass_cutoff_hz)?;
    let slowed = stretch_relabel(&filtered, cfg.stretch_factor)?;
    resample(&slowed, cfg.target_rate_hz)
}
