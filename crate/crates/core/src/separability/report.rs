use std::fmt::Write as _;

use super::analyze::SeparabilityReport;
use crate::dataset::SyllableEmbedding;
use crate::error::{Error, Result};

fn fmt_opt_interval(ci: Option<(f64, f64)>) -> String {
    match ci {
        Some((lo, hi)) => format!("[{lo:.6}, {hi:.6}]"),
        None => "none".to_string(),
    }
}

/// Key/value text rendering with one nested block per class.
pub fn report_text(report: &SeparabilityReport) -> String {
    let cfg = &report.config;
    let ci = report.intervals.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "separability_report:");
    let _ = writeln!(out, "  num_samples: {}", report.silhouettes.len());
    let _ = writeln!(out, "  num_classes: {}", report.labels.len());
    let _ = writeln!(out, "  embedding_dim: {}", report.model.dim());
    let _ = writeln!(out, "  lda_dims: {}", report.model.k());
    match report.model.pca_rank {
        Some(r) => {
            let _ = writeln!(out, "  pca_rank: {r}");
        }
        None => {
            let _ = writeln!(out, "  pca_rank: off");
        }
    }
    let _ = writeln!(out, "  gamma_lda: {:e}", cfg.gamma_lda);
    let _ = writeln!(out, "  gamma_cov: {:e}", cfg.gamma_cov);
    let _ = writeln!(out, "  covariance: {}", cfg.covariance.as_str());
    let _ = writeln!(out, "  bootstrap_n: {}", cfg.bootstrap_n);
    let _ = writeln!(out, "  seed: {}", cfg.seed);
    let _ = writeln!(out, "  eigenvalues:");
    for (i, ev) in report.model.eigenvalues.iter().enumerate() {
        let _ = writeln!(out, "    d{}: {:.9e}", i + 1, ev);
    }
    let _ = writeln!(out, "  overall_mean_silhouette: {:.6}", report.overall_mean);
    let _ = writeln!(
        out,
        "  overall_ci95: {}",
        fmt_opt_interval(ci.map(|c| c.overall))
    );
    let _ = writeln!(
        out,
        "  class_averaged_mean_silhouette: {:.6}",
        report.class_averaged_mean
    );
    let _ = writeln!(
        out,
        "  class_averaged_ci95: {}",
        fmt_opt_interval(ci.map(|c| c.class_averaged))
    );
    let _ = writeln!(out, "  classes:");
    for (k, label) in report.labels.iter().enumerate() {
        let _ = writeln!(out, "    - label: {label}");
        let _ = writeln!(out, "      n: {}", report.num_samples_per_class[k]);
        let _ = writeln!(
            out,
            "      mean_silhouette: {:.6}",
            report.per_class_mean[k]
        );
        let _ = writeln!(
            out,
            "      ci95: {}",
            fmt_opt_interval(ci.map(|c| c.per_class[k]))
        );
    }
    out
}

fn csv_bound(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// CSV rows `class,label,mean,ci_low,ci_high`. Per-class rows come first,
/// followed by `overall` and `class_average` summary rows. CI cells are empty
/// when no bootstrap was run.
pub fn report_csv(report: &SeparabilityReport) -> String {
    let ci = report.intervals.as_ref();
    let mut out = String::from("class,label,mean,ci_low,ci_high\n");
    for (k, label) in report.labels.iter().enumerate() {
        let b = ci.map(|c| c.per_class[k]);
        let _ = writeln!(
            out,
            "{k},{label},{:.6},{},{}",
            report.per_class_mean[k],
            csv_bound(b.map(|b| b.0)),
            csv_bound(b.map(|b| b.1))
        );
    }
    for (name, mean, b) in [
        ("overall", report.overall_mean, ci.map(|c| c.overall)),
        (
            "class_average",
            report.class_averaged_mean,
            ci.map(|c| c.class_averaged),
        ),
    ] {
        let _ = writeln!(
            out,
            "{name},{name},{mean:.6},{},{}",
            csv_bound(b.map(|b| b.0)),
            csv_bound(b.map(|b| b.1))
        );
    }
    out
}

/// `syllable_id,label,d1,d2` for every sample; `d2` is 0 when only one
/// discriminant was kept.
pub fn scatter_csv(
    report: &SeparabilityReport,
    embeddings: &[SyllableEmbedding],
) -> Result<String> {
    let p = &report.projected;
    if p.nrows() != embeddings.len() {
        return Err(Error::Validation(format!(
            "{} embeddings for {} projected rows",
            embeddings.len(),
            p.nrows()
        )));
    }
    let mut out = String::from("syllable_id,label,d1,d2\n");
    for (i, e) in embeddings.iter().enumerate() {
        let d2 = if p.ncols() > 1 { p[(i, 1)] } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{:.8e},{:.8e}",
            e.syllable_id,
            e.label,
            p[(i, 0)],
            d2
        );
    }
    Ok(out)
}
