//! Mono audio clips and RIFF/WAVE decode/encode.
//!
//! Reading accepts integer PCM (16/24/32-bit, format tag 1) and 32-bit IEEE
//! float (tag 3), including the `WAVE_FORMAT_EXTENSIBLE` wrapper around
//! either. Multichannel input is averaged down to mono. Writing always emits
//! 32-bit float so that a write/read cycle is bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const TAG_PCM: u16 = 1;
const TAG_FLOAT: u16 = 3;
const TAG_EXTENSIBLE: u16 = 0xFFFE;

/// Mono waveform with its nominal sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::param("sample_rate_hz", "must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Validation(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a clip from `f64` samples, narrowing to `f32`.
    pub fn from_f64(samples: &[f64], sample_rate_hz: u32) -> Result<Self> {
        Self::new(samples.iter().map(|&s| s as f32).collect(), sample_rate_hz)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Same samples, different nominal rate.
    pub(crate) fn with_rate(self, sample_rate_hz: u32) -> Self {
        Self {
            samples: self.samples,
            sample_rate_hz,
        }
    }

    pub(crate) fn samples_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }

    /// Root-mean-square level in dBFS (amplitude 1.0 is 0 dBFS). Silence maps
    /// to negative infinity.
    pub fn rms_dbfs(&self) -> f64 {
        if self.samples.is_empty() {
            return f64::NEG_INFINITY;
        }
        let power = self
            .samples
            .iter()
            .map(|&s| (s as f64).powi(2))
            .sum::<f64>()
            / self.samples.len() as f64;
        10.0 * power.log10()
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let bytes = fs::read(path)?;
    decode_wav(&bytes)
}

pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_wav(clip))?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptContainer(msg.into())
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(corrupt(format!(
            "fmt chunk is {} bytes, need 16",
            body.len()
        )));
    }
    let mut tag = le_u16(body, 0);
    let channels = le_u16(body, 2);
    let sample_rate = le_u32(body, 4);
    let bits_per_sample = le_u16(body, 14);
    if tag == TAG_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID whose
        // first two bytes carry the real format tag.
        if body.len() < 26 {
            return Err(corrupt("extensible fmt chunk too short"));
        }
        tag = le_u16(body, 24);
    }
    if channels == 0 {
        return Err(corrupt("fmt chunk declares zero channels"));
    }
    if sample_rate == 0 {
        return Err(corrupt("fmt chunk declares zero sample rate"));
    }
    Ok(FmtChunk {
        tag,
        channels,
        sample_rate,
        bits_per_sample,
    })
}

/// Decodes an in-memory RIFF/WAVE file to a mono clip.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(corrupt("file shorter than RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(corrupt("missing RIFF/WAVE signature"));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let start = pos + 8;
        let end = start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                corrupt(format!(
                    "chunk `{}` claims {size} bytes but only {} remain",
                    String::from_utf8_lossy(id),
                    bytes.len() - start
                ))
            })?;
        match id {
            b"fmt " => fmt = Some(parse_fmt(&bytes[start..end])?),
            b"data" => data = Some(&bytes[start..end]),
            _ => {}
        }
        // chunks are word aligned
        pos = end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| corrupt("missing fmt chunk"))?;
    let data = data.ok_or_else(|| corrupt("missing data chunk"))?;

    let bytes_per_sample = match (fmt.tag, fmt.bits_per_sample) {
        (TAG_PCM, 16) => 2,
        (TAG_PCM, 24) => 3,
        (TAG_PCM, 32) | (TAG_FLOAT, 32) => 4,
        (TAG_PCM, bits) | (TAG_FLOAT, bits) => {
            return Err(Error::UnsupportedFormat(format!(
                "format tag {} with {bits} bits per sample",
                fmt.tag
            )))
        }
        (tag, _) => {
            return Err(Error::UnsupportedFormat(format!(
                "format tag {tag} (0x{tag:04X})"
            )))
        }
    };
    let channels = fmt.channels as usize;
    let block = bytes_per_sample * channels;
    if data.len() % block != 0 {
        return Err(corrupt(format!(
            "data chunk of {} bytes is not a whole number of {block}-byte frames",
            data.len()
        )));
    }

    let decode_one = |s: &[u8]| -> f64 {
        match (fmt.tag, bytes_per_sample) {
            (TAG_FLOAT, _) => f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64,
            (_, 2) => i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0,
            (_, 3) => {
                let v = i32::from_le_bytes([0, s[0], s[1], s[2]]) >> 8;
                v as f64 / 8_388_608.0
            }
            _ => i32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64 / 2_147_483_648.0,
        }
    };

    let samples = data
        .chunks_exact(block)
        .map(|frame| {
            if channels == 1 {
                decode_one(frame) as f32
            } else {
                let sum: f64 = frame.chunks_exact(bytes_per_sample).map(decode_one).sum();
                (sum / channels as f64) as f32
            }
        })
        .collect();
    AudioClip::new(samples, fmt.sample_rate)
}

/// Encodes a clip as a mono 32-bit float WAV.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples.len() * 4;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&TAG_FLOAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate_hz * 4).to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&32u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in &clip.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimal PCM writer for test fixtures.
    fn pcm_wav(tag: u16, channels: u16, rate: u32, bits: u16, payload: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&((36 + payload.len()) as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        let block = channels * bits / 8;
        out.extend_from_slice(&(rate * block as u32).to_le_bytes());
        out.extend_from_slice(&block.to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn decodes_16_bit_mono() {
        let payload: Vec<u8> = (0..1000i16).flat_map(|v| (v * 7).to_le_bytes()).collect();
        let clip = decode_wav(&pcm_wav(TAG_PCM, 1, 250_000, 16, &payload)).unwrap();
        assert_eq!(clip.len(), 1000);
        assert_eq!(clip.sample_rate_hz(), 250_000);
        assert_eq!(clip.samples()[3], 21.0 / 32768.0);
    }

    #[test]
    fn sixteen_bit_extremes() {
        let payload: Vec<u8> = [i16::MIN, i16::MAX]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let clip = decode_wav(&pcm_wav(TAG_PCM, 1, 8000, 16, &payload)).unwrap();
        assert_eq!(clip.samples()[0], -1.0);
        assert_eq!(clip.samples()[1] as f64, 1.0 - 2f64.powi(-15));
    }

    #[test]
    fn decodes_24_and_32_bit() {
        let v24: i32 = -4_194_304; // -0.5 full scale
        let b = v24.to_le_bytes();
        let clip = decode_wav(&pcm_wav(TAG_PCM, 1, 48_000, 24, &b[..3])).unwrap();
        assert_eq!(clip.samples()[0], -0.5);

        let v32: i32 = 1 << 29;
        let clip = decode_wav(&pcm_wav(TAG_PCM, 1, 48_000, 32, &v32.to_le_bytes())).unwrap();
        assert_eq!(clip.samples()[0], 0.25);
    }

    #[test]
    fn stereo_is_averaged() {
        let payload: Vec<u8> = [1.0f32, 0.0, 1.0, 0.0]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let clip = decode_wav(&pcm_wav(TAG_FLOAT, 2, 16_000, 32, &payload)).unwrap();
        assert_eq!(clip.samples(), &[0.5, 0.5]);
    }

    #[test]
    fn compressed_tag_is_unsupported() {
        // tag 2 = MS ADPCM
        let err = decode_wav(&pcm_wav(2, 1, 16_000, 4, &[0u8; 8])).unwrap_err();
        match err {
            Error::UnsupportedFormat(msg) => assert!(msg.contains("format tag 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let payload: Vec<u8> = (0..100i16).flat_map(|v| v.to_le_bytes()).collect();
        let bytes = pcm_wav(TAG_PCM, 1, 16_000, 16, &payload);
        let err = decode_wav(&bytes[..bytes.len() - 10]).unwrap_err();
        assert!(matches!(err, Error::CorruptContainer(_)), "{err:?}");
        let err = decode_wav(&bytes[..6]).unwrap_err();
        assert!(matches!(err, Error::CorruptContainer(_)), "{err:?}");
    }

    #[test]
    fn skips_unknown_chunks() {
        let mut bytes = pcm_wav(TAG_PCM, 1, 16_000, 16, &[1, 0, 2, 0]);
        // splice an odd-sized LIST chunk (with pad byte) before fmt
        let list = [b"LIST".as_slice(), &3u32.to_le_bytes(), &[9, 9, 9, 0]].concat();
        bytes.splice(12..12, list);
        let clip = decode_wav(&bytes).unwrap();
        assert_eq!(clip.len(), 2);
    }

    #[test]
    fn empty_clip_roundtrips() {
        let clip = AudioClip::new(vec![], 16_000).unwrap();
        let back = decode_wav(&encode_wav(&clip)).unwrap();
        assert_eq!(back, clip);
    }

    #[test]
    fn header_carries_rate() {
        let clip = AudioClip::new(vec![0.0; 4], 31_250).unwrap();
        let bytes = encode_wav(&clip);
        assert_eq!(le_u32(&bytes, 24), 31_250);
        assert_eq!(le_u16(&bytes, 20), TAG_FLOAT);
    }

    #[test]
    fn rejects_invalid_clips() {
        assert!(AudioClip::new(vec![0.0], 0).is_err());
        assert!(AudioClip::new(vec![f32::NAN], 8000).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let clip =
            AudioClip::new((0..256).map(|i| (i as f32 * 0.37).sin()).collect(), 16_000).unwrap();
        write_wav(&clip, &path).unwrap();
        assert_eq!(read_wav(&path).unwrap(), clip);
        assert!(matches!(
            read_wav(dir.path().join("missing.wav")),
            Err(Error::Io(_))
        ));
    }

    proptest! {
        #[test]
        fn float_roundtrip_is_bitwise(
            samples in prop::collection::vec(-1.0f32..1.0, 0..512),
            rate in 1u32..400_000,
        ) {
            let clip = AudioClip::new(samples, rate).unwrap();
            let back = decode_wav(&encode_wav(&clip)).unwrap();
            prop_assert_eq!(back.sample_rate_hz(), rate);
            let a: Vec<u32> = clip.samples().iter().map(|s| s.to_bits()).collect();
            let b: Vec<u32> = back.samples().iter().map(|s| s.to_bits()).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn pcm16_range(values in prop::collection::vec(any::<i16>(), 1..256)) {
            let payload: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
            let clip = decode_wav(&pcm_wav(TAG_PCM, 1, 8000, 16, &payload)).unwrap();
            for &s in clip.samples() {
                prop_assert!((-1.0..=1.0 - 2f32.powi(-15)).contains(&s));
            }
        }
    }
}
