//! Separability of labelled embeddings.
//!
//! Embeddings are projected onto their leading LDA directions; pairwise
//! Mahalanobis distances in that space (under the pooled within-class
//! covariance by default) feed per-sample silhouette coefficients, which are
//! summarized per class and overall with stratified bootstrap percentile
//! intervals.

mod analyze;
mod covariance;
mod lda;
mod report;
mod silhouette;

pub use analyze::{analyze, AnalyzeConfig, BootstrapIntervals, CovarianceKind, SeparabilityReport};
pub use covariance::{global_covariance, mahalanobis, pooled_covariance};
pub use lda::{discriminant_spectrum, embedding_matrix, fit_lda, project, LdaModel, PcaRank};
pub use report::{report_csv, report_text, scatter_csv};
pub use silhouette::{silhouettes, silhouettes_with};

use std::collections::BTreeMap;

/// Dense class ids for a label sequence. Classes are numbered in sorted
/// label order so results do not depend on input order.
#[derive(Debug, Clone)]
pub struct ClassIndex {
    labels: Vec<String>,
    ids: Vec<usize>,
    counts: Vec<usize>,
}

impl ClassIndex {
    pub fn new<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let raw: Vec<&str> = labels.into_iter().collect();
        let mut map: BTreeMap<&str, usize> = raw.iter().map(|&l| (l, 0)).collect();
        for (i, v) in map.values_mut().enumerate() {
            *v = i;
        }
        let ids: Vec<usize> = raw.iter().map(|l| map[l]).collect();
        let mut counts = vec![0; map.len()];
        for &id in &ids {
            counts[id] += 1;
        }
        Self {
            labels: map.keys().map(|s| s.to_string()).collect(),
            ids,
            counts,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn of(&self, sample: usize) -> usize {
        self.ids[sample]
    }
}
