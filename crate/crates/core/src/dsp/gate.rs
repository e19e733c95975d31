//! STFT-domain noise gate.
//!
//! Every time-frequency bin whose level falls below the threshold is
//! attenuated by a fixed amount. Levels are in dBFS with window-gain
//! normalization: a full-scale sine reads about 0 dBFS at its peak bin.
//! Analysis and synthesis both use a periodic Hann window and the overlap-add
//! output is divided by the summed squared window, so with no bins gated the
//! signal is reconstructed exactly.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::window::hann_periodic;
use crate::audio::AudioClip;
use crate::error::{Error, Result};

pub const GATE_WINDOW: usize = 1024;
pub const GATE_HOP: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutput {
    pub clip: AudioClip,
    /// Set when the clip was shorter than one analysis window and passed
    /// through untouched.
    pub bypassed: bool,
}

pub fn noise_gate(clip: &AudioClip, threshold_db: f64, reduction_db: f64) -> Result<GateOutput> {
    if !threshold_db.is_finite() {
        return Err(Error::param("noise_threshold_db", "must be finite"));
    }
    if !(reduction_db.is_finite() && reduction_db >= 0.0) {
        return Err(Error::param("noise_reduction_db", "must be nonnegative"));
    }
    if clip.len() < GATE_WINDOW {
        log::warn!(
            "noise gate skipped: clip has {} samples, fewer than one {GATE_WINDOW}-sample window",
            clip.len()
        );
        return Ok(GateOutput {
            clip: clip.clone(),
            bypassed: true,
        });
    }

    let n = clip.len();
    let win = hann_periodic(GATE_WINDOW);
    let win_sum: f64 = win.iter().sum();
    let attenuation = 10f64.powf(-reduction_db / 20.0);
    // amplitude thresholds per bin (DC and Nyquist have no mirrored twin)
    let threshold_amp = 10f64.powf(threshold_db / 20.0);
    let half = GATE_WINDOW / 2;

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(GATE_WINDOW);
    let inv = planner.plan_fft_inverse(GATE_WINDOW);

    // zero-pad by a full window on both sides so every sample sees full overlap
    let mut padded = vec![0.0; n + 2 * GATE_WINDOW];
    for (p, &s) in padded[GATE_WINDOW..].iter_mut().zip(clip.samples()) {
        *p = s as f64;
    }
    let mut acc = vec![0.0; padded.len()];
    let mut envelope = vec![0.0; padded.len()];
    let mut buf = vec![Complex::new(0.0, 0.0); GATE_WINDOW];
    let scale = 1.0 / GATE_WINDOW as f64;

    let mut start = 0;
    while start + GATE_WINDOW <= padded.len() {
        for ((b, &x), &w) in buf.iter_mut().zip(&padded[start..]).zip(&win) {
            *b = Complex::new(x * w, 0.0);
        }
        fwd.process(&mut buf);
        for k in 0..=half {
            let factor = if k == 0 || k == half { 1.0 } else { 2.0 };
            let level = factor * buf[k].norm() / win_sum;
            if level < threshold_amp {
                buf[k] *= attenuation;
                if k != 0 && k != half {
                    buf[GATE_WINDOW - k] *= attenuation;
                }
            }
        }
        inv.process(&mut buf);
        for (i, (b, &w)) in buf.iter().zip(&win).enumerate() {
            acc[start + i] += b.re * scale * w;
            envelope[start + i] += w * w;
        }
        start += GATE_HOP;
    }

    let out: Vec<f64> = (GATE_WINDOW..GATE_WINDOW + n)
        .map(|i| acc[i] / envelope[i])
        .collect();
    Ok(GateOutput {
        clip: AudioClip::from_f64(&out, clip.sample_rate_hz())?,
        bypassed: false,
    })
}
