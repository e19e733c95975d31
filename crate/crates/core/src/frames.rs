use crate::error::{Error, Result};

/// Time-indexed feature frames, stored frame-major (`num_frames × dim`).
///
/// Frame `t` is centered at `offset_seconds + t * hop_seconds`. Encoder and
/// cepstral features share this container so pooling has no per-source
/// special cases.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    dim: usize,
    hop_seconds: f64,
    offset_seconds: f64,
    data: Vec<f32>,
}

impl FrameMatrix {
    pub fn new(dim: usize, hop_seconds: f64, offset_seconds: f64, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        if !(hop_seconds.is_finite() && hop_seconds > 0.0) {
            return Err(Error::param(
                "hop_seconds",
                format!("{hop_seconds} is not positive"),
            ));
        }
        if !(offset_seconds.is_finite() && offset_seconds >= 0.0) {
            return Err(Error::param(
                "offset_seconds",
                format!("{offset_seconds} is not nonnegative"),
            ));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Validation(format!(
                "{} values do not form rows of width {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "frame {} has a non-finite entry",
                i / dim
            )));
        }
        Ok(Self {
            dim,
            hop_seconds,
            offset_seconds,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop_seconds
    }

    pub fn offset_seconds(&self) -> f64 {
        self.offset_seconds
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn center_seconds(&self, t: usize) -> f64 {
        self.offset_seconds + t as f64 * self.hop_seconds
    }
}
