//! `SYLF` v1: the binary frame-feature container.
//!
//! Layout, all little-endian:
//!
//! | field            | type          |
//! |------------------|---------------|
//! | magic            | `b"SYLF"`     |
//! | version          | u32 = 1       |
//! | dim              | u32           |
//! | num_frames       | u64           |
//! | hop_seconds      | f64           |
//! | offset_seconds   | f64           |
//! | source_name_len  | u32           |
//! | source_name      | UTF-8 bytes   |
//! | payload          | `num_frames × dim` f32, frame-major |
//!
//! External encoder exporters write exactly this layout, so a single reader
//! serves both cepstral and encoder features.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frames::FrameMatrix;

pub const MAGIC: &[u8; 4] = b"SYLF";
pub const VERSION: u32 = 1;
const FIXED_HEADER_LEN: usize = 40;

pub fn header_len(source_name: &str) -> usize {
    FIXED_HEADER_LEN + source_name.len()
}

pub fn encode_frames(fm: &FrameMatrix, source_name: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(header_len(source_name) + fm.data().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(fm.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(fm.num_frames() as u64).to_le_bytes());
    out.extend_from_slice(&fm.hop_seconds().to_le_bytes());
    out.extend_from_slice(&fm.offset_seconds().to_le_bytes());
    out.extend_from_slice(&(source_name.len() as u32).to_le_bytes());
    out.extend_from_slice(source_name.as_bytes());
    for v in fm.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptContainer("truncated SYLF header".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_frames(bytes: &[u8]) -> Result<(FrameMatrix, String)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::NotSylf);
    }
    let mut cur = Cursor { bytes, pos: 4 };
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dim = cur.u32()? as usize;
    let num_frames = cur.u64()?;
    let hop = cur.f64()?;
    let offset = cur.f64()?;
    let name_len = cur.u32()? as usize;
    let name = std::str::from_utf8(cur.take(name_len)?)
        .map_err(|_| Error::CorruptContainer("source name is not UTF-8".into()))?
        .to_owned();

    let payload = &bytes[cur.pos..];
    let expected = num_frames
        .checked_mul(dim as u64)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::CorruptContainer("payload size overflows".into()))?;
    if (payload.len() as u64) < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len() as u64,
        });
    }
    if payload.len() as u64 > expected {
        return Err(Error::CorruptContainer(format!(
            "{} trailing bytes after payload",
            payload.len() as u64 - expected
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let fm = FrameMatrix::new(dim, hop, offset, data)
        .map_err(|e| Error::CorruptContainer(format!("invalid header or payload: {e}")))?;
    Ok((fm, name))
}

pub fn write_frames(fm: &FrameMatrix, source_name: &str, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_frames(fm, source_name))?;
    Ok(())
}

pub fn read_frames(path: impl AsRef<Path>) -> Result<(FrameMatrix, String)> {
    decode_frames(&fs::read(path)?)
}
