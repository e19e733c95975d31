//! Linear-phase FIR design and fast zero-delay convolution.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::window::{hamming, sinc};
use crate::audio::AudioClip;
use crate::error::{Error, Result};

pub const HIGHPASS_TAPS: usize = 513;

/// Windowed-sinc (Hamming) high-pass by spectral inversion of a unit-DC-gain
/// low-pass. `cutoff` is a fraction of the sample rate, in `(0, 0.5)`.
pub fn highpass_taps(cutoff: f64, num_taps: usize) -> Vec<f64> {
    assert!(num_taps % 2 == 1, "linear-phase high-pass needs odd length");
    let center = (num_taps / 2) as f64;
    let window = hamming(num_taps);
    let mut lowpass: Vec<f64> = window
        .iter()
        .enumerate()
        .map(|(i, w)| 2.0 * cutoff * sinc(2.0 * cutoff * (i as f64 - center)) * w)
        .collect();
    let dc: f64 = lowpass.iter().sum();
    lowpass.iter_mut().for_each(|h| *h /= dc);

    let mut taps: Vec<f64> = lowpass.iter().map(|h| -h).collect();
    taps[num_taps / 2] += 1.0;
    taps
}

/// Complex frequency response of `taps` at `freq` (fraction of the sample
/// rate).
pub fn frequency_response(taps: &[f64], freq: f64) -> Complex<f64> {
    taps.iter()
        .enumerate()
        .map(|(k, &h)| Complex::from_polar(h, -2.0 * PI * freq * k as f64))
        .sum()
}

/// Convolves with an odd-length linear-phase filter and removes its group
/// delay: `y[n] = sum_k taps[k] * x[n + c - k]`, `c = len/2`, with zeros
/// outside the signal. Uses FFT overlap-add.
pub fn convolve_centered(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len();
    let t = taps.len();
    let mut out = vec![0.0; n];
    if n == 0 || t == 0 {
        return out;
    }
    let delay = t / 2;
    let fft_len = (4 * t).next_power_of_two().max(1024);
    let block = fft_len - t + 1;

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(fft_len);
    let inv = planner.plan_fft_inverse(fft_len);

    let mut kernel = vec![Complex::new(0.0, 0.0); fft_len];
    for (k, &h) in taps.iter().enumerate() {
        kernel[k].re = h;
    }
    fwd.process(&mut kernel);

    let scale = 1.0 / fft_len as f64;
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    let mut start = 0;
    while start < n {
        let len = block.min(n - start);
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(&x[start..start + len]) {
            b.re = v;
        }
        fwd.process(&mut buf);
        buf.iter_mut().zip(&kernel).for_each(|(b, k)| *b *= k);
        inv.process(&mut buf);
        // full-convolution index start + i maps to output index start + i - delay
        for (i, c) in buf.iter().take(len + t - 1).enumerate() {
            let j = start + i;
            if j >= delay && j - delay < n {
                out[j - delay] += c.re * scale;
            }
        }
        start += len;
    }
    out
}

/// High-pass `clip` at `cutoff_hz` with the 513-tap Hamming design, output
/// aligned to the input.
pub fn highpass(clip: &AudioClip, cutoff_hz: f64) -> Result<AudioClip> {
    let nyquist = clip.sample_rate_hz() as f64 / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::param(
            "highpass_cutoff_hz",
            format!(
                "{cutoff_hz} Hz must lie in (0, {nyquist}) for rate {} Hz",
                clip.sample_rate_hz()
            ),
        ));
    }
    let taps = highpass_taps(cutoff_hz / clip.sample_rate_hz() as f64, HIGHPASS_TAPS);
    let y = convolve_centered(&clip.samples_f64(), &taps);
    AudioClip::from_f64(&y, clip.sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_centered(x: &[f64], taps: &[f64]) -> Vec<f64> {
        let c = (taps.len() / 2) as isize;
        (0..x.len() as isize)
            .map(|n| {
                taps.iter()
                    .enumerate()
                    .map(|(k, h)| {
                        let i = n + c - k as isize;
                        if i >= 0 && (i as usize) < x.len() {
                            h * x[i as usize]
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn overlap_add_matches_direct_convolution() {
        let x: Vec<f64> = (0..5000)
            .map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0)
            .collect();
        let taps = highpass_taps(0.04, 513);
        let fast = convolve_centered(&x, &taps);
        let slow = direct_centered(&x, &taps);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let short = vec![1.0, -2.0, 0.5];
        let fast = convolve_centered(&short, &taps);
        for (a, b) in fast.iter().zip(direct_centered(&short, &taps)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn response_oracle() {
        let taps = highpass_taps(10_000.0 / 250_000.0, 513);
        assert!(frequency_response(&taps, 0.0).norm() < 1e-12);
        let pass_db = 20.0
            * frequency_response(&taps, 20_000.0 / 250_000.0)
                .norm()
                .log10();
        assert!(pass_db.abs() < 1.0, "{pass_db}");
        // Hamming design: ~53 dB stopband
        let stop_db = 20.0
            * frequency_response(&taps, 4_000.0 / 250_000.0)
                .norm()
                .log10();
        assert!(stop_db < -50.0, "{stop_db}");
    }

    #[test]
    fn dc_is_rejected() {
        let clip = AudioClip::new(vec![0.25; 20_000], 250_000).unwrap();
        let out = highpass(&clip, 10_000.0).unwrap();
        assert_eq!(out.len(), clip.len());
        let bound = 10f64.powf(-50.0 / 20.0) * 0.25;
        let central = &out.samples()[HIGHPASS_TAPS..out.len() - HIGHPASS_TAPS];
        let worst = central.iter().map(|s| s.abs() as f64).fold(0.0, f64::max);
        assert!(worst <= bound, "{worst}");
    }

    #[test]
    fn passband_tone_level() {
        let rate = 250_000.0;
        let x: Vec<f64> = (0..50_000)
            .map(|i| (2.0 * PI * 20_000.0 * i as f64 / rate).sin())
            .collect();
        let clip = AudioClip::from_f64(&x, 250_000).unwrap();
        let out = highpass(&clip, 10_000.0).unwrap();
        let c = 1000..49_000;
        let rms = |s: &[f32]| {
            (s[c.clone()]
                .iter()
                .map(|v| (*v as f64).powi(2))
                .sum::<f64>()
                / c.len() as f64)
                .sqrt()
        };
        let gain_db = 20.0 * (rms(out.samples()) / rms(clip.samples())).log10();
        assert!(gain_db.abs() <= 1.0, "{gain_db}");
    }

    #[test]
    fn cutoff_above_nyquist_is_rejected() {
        let clip = AudioClip::new(vec![0.0; 10], 250_000).unwrap();
        assert!(matches!(
            highpass(&clip, 130_000.0),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
