use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::covariance::{global_covariance, mahalanobis, pooled_covariance};
use super::lda::{embedding_matrix, fit_lda_matrix, project, LdaModel, PcaRank};
use super::silhouette::silhouettes_with;
use super::ClassIndex;
use crate::dataset::SyllableEmbedding;
use crate::error::{Error, Result};

/// Covariance defining the Mahalanobis metric in the projected space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    PooledWithin,
    Global,
}

impl CovarianceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CovarianceKind::PooledWithin => "pooled_within",
            CovarianceKind::Global => "global",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeConfig {
    pub lda_dims: usize,
    pub gamma_lda: f64,
    pub gamma_cov: f64,
    pub pca: PcaRank,
    pub covariance: CovarianceKind,
    pub bootstrap_n: usize,
    pub seed: u64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            lda_dims: 4,
            gamma_lda: 1e-3,
            gamma_cov: 1e-6,
            pca: PcaRank::Auto,
            covariance: CovarianceKind::PooledWithin,
            bootstrap_n: 1000,
            seed: 42,
        }
    }
}

/// 95% percentile intervals, `(low, high)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapIntervals {
    pub per_class: Vec<(f64, f64)>,
    pub overall: (f64, f64),
    pub class_averaged: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityReport {
    pub config: AnalyzeConfig,
    pub model: LdaModel,
    /// `n × k` projected embeddings, rows in input order.
    pub projected: DMatrix<f64>,
    pub silhouettes: Vec<f64>,
    /// Class labels in sorted order; per-class vectors follow this order.
    pub labels: Vec<String>,
    pub num_samples_per_class: Vec<usize>,
    pub per_class_mean: Vec<f64>,
    /// Unweighted mean over all samples.
    pub overall_mean: f64,
    /// Mean of the per-class means.
    pub class_averaged_mean: f64,
    pub intervals: Option<BootstrapIntervals>,
}

struct Summary {
    per_class: Vec<f64>,
    overall: f64,
    class_averaged: f64,
}

fn summarize(scores: &[f64], ids: &[usize], num_classes: usize) -> Summary {
    let mut sums = vec![0.0; num_classes];
    let mut counts = vec![0usize; num_classes];
    for (&s, &id) in scores.iter().zip(ids) {
        sums[id] += s;
        counts[id] += 1;
    }
    let per_class: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    Summary {
        overall: scores.iter().sum::<f64>() / scores.len() as f64,
        class_averaged: per_class.iter().sum::<f64>() / num_classes as f64,
        per_class,
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// 2.5/97.5 percentiles, widened if needed so the interval holds `point`.
fn percentile_interval(mut draws: Vec<f64>, point: f64) -> (f64, f64) {
    draws.sort_by(f64::total_cmp);
    let low = quantile(&draws, 0.025).min(point);
    let high = quantile(&draws, 0.975).max(point);
    (low, high)
}

/// Stratified bootstrap: each class is resampled with replacement to its own
/// size, and silhouettes are recomputed from the fixed distance matrix.
/// Iteration `b` draws from ChaCha8 stream `b` under `seed`, so the result
/// does not depend on thread scheduling.
fn bootstrap(
    distance: &DMatrix<f64>,
    classes: &ClassIndex,
    iterations: usize,
    seed: u64,
) -> Result<Vec<Summary>> {
    let c = classes.num_classes();
    let members: Vec<Vec<usize>> = (0..c)
        .map(|k| {
            (0..classes.ids().len())
                .filter(|&i| classes.of(i) == k)
                .collect()
        })
        .collect();
    let labels: Vec<usize> = members
        .iter()
        .enumerate()
        .flat_map(|(k, m)| std::iter::repeat_n(k, m.len()))
        .collect();

    (0..iterations)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let picks: Vec<usize> = members
                .iter()
                .flat_map(|m| {
                    (0..m.len())
                        .map(|_| m[rng.random_range(0..m.len())])
                        .collect::<Vec<_>>()
                })
                .collect();
            let scores = silhouettes_with(&labels, |i, j| distance[(picks[i], picks[j])])?;
            Ok(summarize(&scores, &labels, c))
        })
        .collect()
}

pub fn analyze(
    embeddings: &[SyllableEmbedding],
    cfg: &AnalyzeConfig,
) -> Result<SeparabilityReport> {
    if !(0.0..=1.0).contains(&cfg.gamma_cov) {
        return Err(Error::param(
            "gamma_cov",
            format!("{} is outside [0, 1]", cfg.gamma_cov),
        ));
    }
    let x = embedding_matrix(embeddings)?;
    let classes = ClassIndex::new(embeddings.iter().map(|e| e.label.as_str()));
    let model = fit_lda_matrix(&x, &classes, cfg.lda_dims, cfg.gamma_lda, cfg.pca)?;
    let projected = project(&model, &x)?;

    let (_, inv_cov) = match cfg.covariance {
        CovarianceKind::PooledWithin => {
            pooled_covariance(&projected, classes.ids(), cfg.gamma_cov)?
        }
        CovarianceKind::Global => global_covariance(&projected, cfg.gamma_cov)?,
    };
    let n = projected.nrows();
    let rows: Vec<Vec<f64>> = projected
        .row_iter()
        .map(|r| r.iter().cloned().collect())
        .collect();
    let mut distance = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = mahalanobis(&rows[i], &rows[j], &inv_cov);
            distance[(i, j)] = d;
            distance[(j, i)] = d;
        }
    }

    let scores = silhouettes_with(classes.ids(), |i, j| distance[(i, j)])?;
    let point = summarize(&scores, classes.ids(), classes.num_classes());

    let intervals = if cfg.bootstrap_n > 0 {
        let draws = bootstrap(&distance, &classes, cfg.bootstrap_n, cfg.seed)?;
        let per_class = (0..classes.num_classes())
            .map(|k| {
                percentile_interval(
                    draws.iter().map(|d| d.per_class[k]).collect(),
                    point.per_class[k],
                )
            })
            .collect();
        Some(BootstrapIntervals {
            per_class,
            overall: percentile_interval(draws.iter().map(|d| d.overall).collect(), point.overall),
            class_averaged: percentile_interval(
                draws.iter().map(|d| d.class_averaged).collect(),
                point.class_averaged,
            ),
        })
    } else {
        None
    };

    Ok(SeparabilityReport {
        config: cfg.clone(),
        labels: classes.labels().to_vec(),
        num_samples_per_class: classes.counts().to_vec(),
        per_class_mean: point.per_class,
        overall_mean: point.overall,
        class_averaged_mean: point.class_averaged,
        silhouettes: scores,
        intervals,
        model,
        projected,
    })
}
