//! Mel- and linear-frequency cepstral coefficients.
//!
//! Frames of `fft_size` samples are Hann-windowed, transformed to a power
//! spectrum, pooled by a bank of triangular filters, log-compressed with a
//! floor and decorrelated with an orthonormal DCT-II. Coefficient 0 is kept;
//! there is no pre-emphasis, no liftering and no mean normalization.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioClip;
use crate::dsp::window::hann_periodic;
use crate::error::{Error, Result};
use crate::frames::FrameMatrix;

pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterScale {
    Mel,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CepstralConfig {
    pub kind: FilterScale,
    pub fft_size: usize,
    pub hop: usize,
    pub num_filters: usize,
    pub num_coeffs: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
}

impl Default for CepstralConfig {
    fn default() -> Self {
        Self {
            kind: FilterScale::Mel,
            fft_size: 400,
            hop: 320,
            num_filters: 26,
            num_coeffs: 13,
            fmin_hz: 0.0,
            fmax_hz: 8000.0,
        }
    }
}

impl CepstralConfig {
    pub fn mfcc() -> Self {
        Self::default()
    }

    pub fn lfcc() -> Self {
        Self {
            kind: FilterScale::Linear,
            ..Self::default()
        }
    }

    fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        if self.fft_size < 2 {
            return Err(Error::param("fft_size", "must be at least 2"));
        }
        if self.hop == 0 {
            return Err(Error::param("hop", "must be positive"));
        }
        if self.num_filters == 0 {
            return Err(Error::param("num_filters", "must be positive"));
        }
        if self.num_coeffs == 0 || self.num_coeffs > self.num_filters {
            return Err(Error::param(
                "num_coeffs",
                format!("{} must lie in 1..={}", self.num_coeffs, self.num_filters),
            ));
        }
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz) {
            return Err(Error::param(
                "fmin_hz",
                format!(
                    "{} must be nonnegative and below fmax {}",
                    self.fmin_hz, self.fmax_hz
                ),
            ));
        }
        if 2.0 * self.fmax_hz > sample_rate_hz as f64 {
            return Err(Error::param(
                "fmax_hz",
                format!(
                    "{} Hz exceeds Nyquist for rate {sample_rate_hz} Hz",
                    self.fmax_hz
                ),
            ));
        }
        Ok(())
    }
}

/// HTK mel scale.
pub fn hz_to_mel(f_hz: f64) -> f64 {
    2595.0 * (1.0 + f_hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank over the `fft_size/2 + 1` non-negative frequency
/// bins, one row per filter.
///
/// Triangle corners are equally spaced on the chosen scale across
/// `[fmin, fmax]`. Each row is rescaled so its largest weight is exactly 1;
/// a triangle too narrow to cover any bin puts unit weight on the bin nearest
/// its center.
pub fn filterbank(
    kind: FilterScale,
    num_filters: usize,
    fft_size: usize,
    sample_rate_hz: u32,
    fmin_hz: f64,
    fmax_hz: f64,
) -> Vec<Vec<f64>> {
    type Warp = fn(f64) -> f64;
    let (to_scale, from_scale): (Warp, Warp) = match kind {
        FilterScale::Mel => (hz_to_mel, mel_to_hz),
        FilterScale::Linear => (|f| f, |f| f),
    };
    let lo = to_scale(fmin_hz);
    let hi = to_scale(fmax_hz);
    let corners: Vec<f64> = (0..num_filters + 2)
        .map(|i| from_scale(lo + (hi - lo) * i as f64 / (num_filters + 1) as f64))
        .collect();
    let bins = fft_size / 2 + 1;
    let bin_hz = sample_rate_hz as f64 / fft_size as f64;

    corners
        .windows(3)
        .map(|c| {
            let (left, center, right) = (c[0], c[1], c[2]);
            let mut row: Vec<f64> = (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= left || f >= right {
                        0.0
                    } else if f <= center {
                        (f - left) / (center - left)
                    } else {
                        (right - f) / (right - center)
                    }
                })
                .collect();
            let peak = row.iter().cloned().fold(0.0, f64::max);
            if peak > 0.0 {
                row.iter_mut().for_each(|w| *w /= peak);
            } else {
                let nearest = ((center / bin_hz).round() as usize).min(bins - 1);
                row[nearest] = 1.0;
            }
            row
        })
        .collect()
}

/// Orthonormal DCT-II matrix, `num_coeffs × n`.
pub fn dct_matrix(num_coeffs: usize, n: usize) -> Vec<Vec<f64>> {
    (0..num_coeffs)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            (0..n)
                .map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                .collect()
        })
        .collect()
}

pub fn num_frames(num_samples: usize, fft_size: usize, hop: usize) -> usize {
    if num_samples < fft_size {
        0
    } else {
        (num_samples - fft_size) / hop + 1
    }
}

pub fn cepstral_features(clip: &AudioClip, cfg: &CepstralConfig) -> Result<FrameMatrix> {
    let rate = clip.sample_rate_hz();
    cfg.validate(rate)?;
    if clip.len() < cfg.fft_size {
        return Err(Error::InsufficientSamples {
            needed: cfg.fft_size,
            got: clip.len(),
        });
    }

    let bank = filterbank(
        cfg.kind,
        cfg.num_filters,
        cfg.fft_size,
        rate,
        cfg.fmin_hz,
        cfg.fmax_hz,
    );
    let dct = dct_matrix(cfg.num_coeffs, cfg.num_filters);
    let window = hann_periodic(cfg.fft_size);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.fft_size);
    let bins = cfg.fft_size / 2 + 1;

    let frames = num_frames(clip.len(), cfg.fft_size, cfg.hop);
    let samples = clip.samples();
    let mut data = Vec::with_capacity(frames * cfg.num_coeffs);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];
    let mut power = vec![0.0; bins];
    let mut log_energy = vec![0.0; cfg.num_filters];

    for t in 0..frames {
        let start = t * cfg.hop;
        for ((b, &x), &w) in buf.iter_mut().zip(&samples[start..]).zip(&window) {
            *b = Complex::new(x as f64 * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        for (e, row) in log_energy.iter_mut().zip(&bank) {
            let energy: f64 = row.iter().zip(&power).map(|(w, p)| w * p).sum();
            *e = energy.max(LOG_FLOOR).ln();
        }
        for basis in &dct {
            let c: f64 = basis.iter().zip(&log_energy).map(|(b, e)| b * e).sum();
            data.push(c as f32);
        }
    }

    FrameMatrix::new(
        cfg.num_coeffs,
        cfg.hop as f64 / rate as f64,
        (cfg.fft_size / 2) as f64 / rate as f64,
        data,
    )
}
