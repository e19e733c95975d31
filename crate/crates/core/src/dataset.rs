//! Syllable annotations, frame pooling and synthetic recordings.
//!
//! Annotations are kept on the original (un-stretched) recording timeline;
//! pooling scales them by the stretch factor so they line up with features
//! computed on slowed-down audio.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::frames::FrameMatrix;

pub const ANNOTATION_COLUMNS: [&str; 5] = [
    "recording_id",
    "syllable_id",
    "onset_s",
    "offset_s",
    "label",
];

/// Frame-center comparisons use this slack (seconds) so that centers and
/// boundaries which agree up to rounding are treated as equal.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SyllableAnnotation {
    pub recording_id: String,
    pub syllable_id: String,
    pub onset_s: f64,
    pub offset_s: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyllableEmbedding {
    pub syllable_id: String,
    pub label: String,
    pub vector: Vec<f64>,
}

pub fn parse_annotations<R: Read>(reader: R) -> Result<Vec<SyllableAnnotation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(ANNOTATION_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))?;
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let row = i + 2;
        let field = |k: usize| record.get(idx[k]).unwrap_or("");
        let time = |k: usize| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::Validation(format!(
                        "row {row}: `{}` is not a valid {}",
                        field(k),
                        ANNOTATION_COLUMNS[k]
                    ))
                })
        };
        let ann = SyllableAnnotation {
            recording_id: field(0).to_owned(),
            syllable_id: field(1).to_owned(),
            onset_s: time(2)?,
            offset_s: time(3)?,
            label: field(4).to_owned(),
        };
        if ann.onset_s < 0.0 {
            return Err(Error::Validation(format!("row {row}: negative onset")));
        }
        if ann.offset_s <= ann.onset_s {
            return Err(Error::Validation(format!(
                "row {row}: offset {} is not after onset {}",
                ann.offset_s, ann.onset_s
            )));
        }
        if ann.label.is_empty() {
            return Err(Error::Validation(format!("row {row}: empty label")));
        }
        if !seen.insert((ann.recording_id.clone(), ann.syllable_id.clone())) {
            return Err(Error::Validation(format!(
                "row {row}: duplicate syllable ({}, {})",
                ann.recording_id, ann.syllable_id
            )));
        }
        out.push(ann);
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(writer: W, anns: &[SyllableAnnotation]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ANNOTATION_COLUMNS)?;
    for a in anns {
        wtr.write_record([
            a.recording_id.as_str(),
            a.syllable_id.as_str(),
            &a.onset_s.to_string(),
            &a.offset_s.to_string(),
            a.label.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Result of pooling one recording: embeddings for every syllable that
/// overlaps the feature range (in annotation order) plus one
/// [`Error::OutOfRange`] per syllable that does not.
#[derive(Debug)]
pub struct Pooled {
    pub embeddings: Vec<SyllableEmbedding>,
    pub dropped: Vec<Error>,
}

/// Indices of frames whose centers fall in `[start, end)` seconds.
pub fn frames_in_interval(fm: &FrameMatrix, start: f64, end: f64) -> std::ops::Range<usize> {
    let n = fm.num_frames();
    let hop = fm.hop_seconds();
    let off = fm.offset_seconds();
    let inside_lo = |t: usize| fm.center_seconds(t) >= start - TIME_EPS;
    let inside_hi = |t: usize| fm.center_seconds(t) < end - TIME_EPS;
    // estimate, then settle on the exact boundary by comparing real centers
    let mut lo = (((start - off) / hop).floor().max(0.0) as usize).min(n);
    while lo > 0 && inside_lo(lo - 1) {
        lo -= 1;
    }
    while lo < n && !inside_lo(lo) {
        lo += 1;
    }
    let mut hi = (((end - off) / hop).ceil().max(0.0) as usize).clamp(lo, n);
    while hi > lo && !inside_hi(hi - 1) {
        hi -= 1;
    }
    while hi < n && inside_hi(hi) {
        hi += 1;
    }
    lo..hi
}

/// Averages the frames inside each annotated syllable.
///
/// Each interval is scaled by `stretch_factor`, frames are selected by
/// half-open center containment, and a syllable that contains no frame
/// center falls back to the single frame nearest its midpoint.
pub fn pool_syllables(
    fm: &FrameMatrix,
    anns: &[SyllableAnnotation],
    stretch_factor: u32,
) -> Result<Pooled> {
    if stretch_factor == 0 {
        return Err(Error::param("stretch_factor", "must be at least 1"));
    }
    let n = fm.num_frames();
    if n == 0 {
        return Err(Error::Validation("feature matrix has no frames".into()));
    }
    let half_hop = fm.hop_seconds() / 2.0;
    let covered_start = fm.center_seconds(0) - half_hop;
    let covered_end = fm.center_seconds(n - 1) + half_hop;

    let mut pooled = Pooled {
        embeddings: Vec::with_capacity(anns.len()),
        dropped: Vec::new(),
    };
    for ann in anns {
        let start = ann.onset_s * stretch_factor as f64;
        let end = ann.offset_s * stretch_factor as f64;
        if end <= covered_start || start >= covered_end {
            pooled.dropped.push(Error::OutOfRange {
                syllable_id: ann.syllable_id.clone(),
            });
            continue;
        }
        let mut range = frames_in_interval(fm, start, end);
        if range.is_empty() {
            let mid = 0.5 * (start + end);
            let t = ((mid - fm.offset_seconds()) / fm.hop_seconds()).round();
            let t = t.clamp(0.0, (n - 1) as f64) as usize;
            range = t..t + 1;
        }
        let count = range.len() as f64;
        let mut vector = vec![0.0; fm.dim()];
        for t in range {
            for (acc, &v) in vector.iter_mut().zip(fm.row(t)) {
                *acc += v as f64;
            }
        }
        vector.iter_mut().for_each(|v| *v /= count);
        pooled.embeddings.push(SyllableEmbedding {
            syllable_id: ann.syllable_id.clone(),
            label: ann.label.clone(),
            vector,
        });
    }
    Ok(pooled)
}

/// Writes `syllable_id,label,v0,...` with 9 significant digits per value.
pub fn write_embeddings<W: Write>(writer: W, embeddings: &[SyllableEmbedding]) -> Result<()> {
    let dim = embeddings.first().map_or(0, |e| e.vector.len());
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["syllable_id".to_owned(), "label".to_owned()];
    header.extend((0..dim).map(|i| format!("v{i}")));
    wtr.write_record(&header)?;
    for e in embeddings {
        if e.vector.len() != dim {
            return Err(Error::Validation(format!(
                "embedding `{}` has dimension {}, expected {dim}",
                e.syllable_id,
                e.vector.len()
            )));
        }
        let mut record = vec![e.syllable_id.clone(), e.label.clone()];
        record.extend(e.vector.iter().map(|v| format!("{v:.8e}")));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_embeddings<R: Read>(reader: R) -> Result<Vec<SyllableEmbedding>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    for (i, name) in ["syllable_id", "label"].iter().enumerate() {
        if headers.get(i) != Some(name) {
            return Err(Error::MissingColumn((*name).to_owned()));
        }
    }
    let dim = headers.len() - 2;
    if dim == 0 {
        return Err(Error::MissingColumn("v0".into()));
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 2;
        if record.len() != dim + 2 {
            return Err(Error::Validation(format!(
                "row {row}: expected {} fields, found {}",
                dim + 2,
                record.len()
            )));
        }
        let vector = record
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::Validation(format!("row {row}: non-numeric value")))?;
        out.push(SyllableEmbedding {
            syllable_id: record[0].to_owned(),
            label: record[1].to_owned(),
            vector,
        });
    }
    Ok(out)
}

pub const SYNTH_RATE_HZ: u32 = 256_000;
pub const SYNTH_BAND_LOW_HZ: f64 = 12_000.0;
pub const SYNTH_BAND_HIGH_HZ: f64 = 60_000.0;
pub const SYNTH_AMPLITUDE: f64 = 0.5;
pub const SYNTH_NOISE_DBFS: f64 = -45.0;
pub const SYNTH_GAP_S: f64 = 0.05;
pub const SYNTH_MIN_DURATION_S: f64 = 0.08;
pub const SYNTH_MAX_DURATION_S: f64 = 0.4;
const SYNTH_FADE_S: f64 = 0.005;
/// Fraction of a class band left unused at each edge.
const SYNTH_BAND_GUARD: f64 = 0.15;

/// Frequency band `[low, high)` in Hz reserved for class `k` of `num_classes`:
/// the 12-60 kHz range split into equal, disjoint slices.
pub fn synth_class_band(k: usize, num_classes: usize) -> (f64, f64) {
    let width = (SYNTH_BAND_HIGH_HZ - SYNTH_BAND_LOW_HZ) / num_classes as f64;
    let low = SYNTH_BAND_LOW_HZ + k as f64 * width;
    (low, low + width)
}

/// Start and end frequency of class `k`'s chirp. Even classes sweep up, odd
/// classes sweep down.
pub fn synth_chirp(k: usize, num_classes: usize) -> (f64, f64) {
    let (low, high) = synth_class_band(k, num_classes);
    let guard = SYNTH_BAND_GUARD * (high - low);
    let (a, b) = (low + guard, high - guard);
    if k.is_multiple_of(2) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds a deterministic ultrasonic test recording.
///
/// Syllables are emitted class by class (`C0`, `C0`, ..., `C1`, ...), each a
/// linear chirp in its class band with amplitude 0.5 and a duration drawn
/// uniformly from 80-400 ms, separated by 50 ms gaps, over white noise at
/// -45 dBFS. Annotations cover each chirp exactly.
pub fn synthesize_dataset(
    num_classes: usize,
    per_class: &[usize],
    seed: u64,
) -> Result<(AudioClip, Vec<SyllableAnnotation>)> {
    if num_classes == 0 || num_classes != per_class.len() {
        return Err(Error::param(
            "per_class",
            format!("{} counts given for {num_classes} classes", per_class.len()),
        ));
    }
    if let Some(k) = per_class.iter().position(|&c| c == 0) {
        return Err(Error::param(
            "per_class",
            format!("class {k} has zero syllables"),
        ));
    }

    let rate = SYNTH_RATE_HZ as f64;
    let gap = (SYNTH_GAP_S * rate).round() as usize;
    let fade = (SYNTH_FADE_S * rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut spans = Vec::new();
    let mut cursor = gap;
    for (k, &count) in per_class.iter().enumerate() {
        for _ in 0..count {
            let dur = rng.random_range(SYNTH_MIN_DURATION_S..=SYNTH_MAX_DURATION_S);
            let len = (dur * rate).round() as usize;
            spans.push((k, cursor, len));
            cursor += len + gap;
        }
    }

    let mut x = vec![0.0f64; cursor];
    for &(k, start, len) in &spans {
        let (f0, f1) = synth_chirp(k, num_classes);
        let dur = len as f64 / rate;
        for (i, s) in x[start..start + len].iter_mut().enumerate() {
            let t = i as f64 / rate;
            let phase = 2.0 * PI * (f0 * t + 0.5 * (f1 - f0) * t * t / dur);
            let edge = i.min(len - 1 - i);
            let ramp = if edge < fade {
                0.5 - 0.5 * (PI * edge as f64 / fade as f64).cos()
            } else {
                1.0
            };
            *s = SYNTH_AMPLITUDE * ramp * phase.sin();
        }
    }
    let noise = Normal::new(0.0, 10f64.powf(SYNTH_NOISE_DBFS / 20.0)).expect("valid sigma");
    for s in &mut x {
        *s += noise.sample(&mut rng);
    }

    let anns = spans
        .iter()
        .enumerate()
        .map(|(i, &(k, start, len))| SyllableAnnotation {
            recording_id: "synth".into(),
            syllable_id: format!("s{i:04}"),
            onset_s: start as f64 / rate,
            offset_s: (start + len) as f64 / rate,
            label: format!("C{k}"),
        })
        .collect();
    Ok((AudioClip::from_f64(&x, SYNTH_RATE_HZ)?, anns))
}
