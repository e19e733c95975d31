//! Multi-class Fisher LDA with optional PCA pre-reduction and shrinkage.
//!
//! The discriminant directions solve the symmetric generalized eigenproblem
//! `Sb w = lambda Sw' w`, where `Sw' = (1 - gamma) Sw + gamma (tr(Sw)/d) I`.
//! With `Sw' = L L^T` the problem becomes the ordinary symmetric eigenproblem
//! of `L^-1 Sb L^-T`, and `w = L^-T v`, which also gives `w^T Sw' w = 1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::ClassIndex;
use crate::dataset::SyllableEmbedding;
use crate::error::{Error, Result};

/// How far to reduce the centered data with PCA before LDA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaRank {
    /// `clamp(floor((n - c) / 4), c - 1, min(dim, n - c))`. Keeping the
    /// reduced dimension well below the sample count stops the within-class
    /// scatter from collapsing along directions that separate any labelling.
    Auto,
    /// Keep this many leading components (capped by the numerical rank).
    Fixed(usize),
    /// Work in the raw feature space.
    Off,
}

impl PcaRank {
    fn resolve(self, dim: usize, n: usize, classes: usize) -> Result<Option<usize>> {
        let cap = dim.min(n - classes);
        match self {
            PcaRank::Off => Ok(None),
            PcaRank::Auto => Ok(Some(((n - classes) / 4).max(classes - 1).min(cap))),
            PcaRank::Fixed(0) => Err(Error::param("pca_rank", "must be at least 1")),
            PcaRank::Fixed(r) if r > dim => Err(Error::param(
                "pca_rank",
                format!("{r} exceeds the feature dimension {dim}"),
            )),
            PcaRank::Fixed(r) => Ok(Some(r.min(n - 1))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// Global mean of the training vectors.
    pub mean: DVector<f64>,
    /// `dim × k`; columns are discriminant directions in the raw feature
    /// space, strongest first.
    pub projection: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub class_labels: Vec<String>,
    pub gamma: f64,
    /// Number of PCA components actually used, if PCA was applied.
    pub pca_rank: Option<usize>,
}

impl LdaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.projection.ncols()
    }
}

/// Stacks embeddings into an `n × dim` matrix.
pub fn embedding_matrix(embeddings: &[SyllableEmbedding]) -> Result<DMatrix<f64>> {
    let dim = embeddings.first().map_or(0, |e| e.vector.len());
    if dim == 0 {
        return Err(Error::Validation(
            "no embeddings or zero-dimensional vectors".into(),
        ));
    }
    if let Some(e) = embeddings.iter().find(|e| e.vector.len() != dim) {
        return Err(Error::Validation(format!(
            "embedding `{}` has dimension {}, expected {dim}",
            e.syllable_id,
            e.vector.len()
        )));
    }
    Ok(DMatrix::from_fn(embeddings.len(), dim, |i, j| {
        embeddings[i].vector[j]
    }))
}

/// Leading principal axes of the (already centered) rows of `xc`, as a
/// `dim × r` matrix with orthonormal columns. Components whose variance is
/// numerically zero are dropped.
fn principal_axes(xc: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let (n, d) = xc.shape();
    let gram_route = n < d;
    let sym = if gram_route {
        xc * xc.transpose()
    } else {
        xc.transpose() * xc
    };
    let eig = SymmetricEigen::new(sym);
    let order = descending_order(eig.eigenvalues.as_slice());
    let top = eig.eigenvalues[order[0]].max(0.0);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] > top * 1e-12)
        .take(rank)
        .collect();
    let mut axes = DMatrix::zeros(d, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let axis = if gram_route {
            // right singular vector from the left one: X^T u / sigma
            xc.transpose() * eig.eigenvectors.column(i) / eig.eigenvalues[i].sqrt()
        } else {
            eig.eigenvectors.column(i).into_owned()
        };
        axes.set_column(c, &axis);
    }
    axes
}

/// Indices sorting `values` descending; ties keep index order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

pub(crate) fn shrink(scatter: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let d = scatter.nrows();
    let target = scatter.trace() / d as f64;
    let mut out = scatter * (1.0 - gamma);
    for i in 0..d {
        out[(i, i)] += gamma * target;
    }
    out
}

struct Discriminants {
    mean: DVector<f64>,
    /// Maps raw centered vectors into the space the eigenproblem lives in.
    reduction: Option<DMatrix<f64>>,
    eigenvalues: Vec<f64>,
    /// Directions in the reduced space, same order as `eigenvalues`.
    directions: DMatrix<f64>,
}

fn solve_discriminants(
    x: &DMatrix<f64>,
    classes: &ClassIndex,
    gamma: f64,
    pca: PcaRank,
) -> Result<Discriminants> {
    let (n, dim) = x.shape();
    let c = classes.num_classes();
    if c < 2 {
        return Err(Error::Validation(format!(
            "LDA needs at least 2 classes, got {c}"
        )));
    }
    if let Some(k) = classes.counts().iter().position(|&m| m == 0) {
        return Err(Error::Validation(format!(
            "class `{}` has no samples",
            classes.labels()[k]
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::param("gamma", format!("{gamma} is outside [0, 1]")));
    }
    if n <= c {
        return Err(Error::Validation(format!(
            "{n} samples cannot estimate within-class scatter for {c} classes"
        )));
    }

    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let reduction = pca
        .resolve(dim, n, c)?
        .map(|rank| principal_axes(&centered, rank));
    let z = match &reduction {
        Some(p) => &centered * p,
        None => centered,
    };
    let r = z.ncols();

    let mut class_means = DMatrix::zeros(c, r);
    for (i, row) in z.row_iter().enumerate() {
        let mut m = class_means.row_mut(classes.of(i));
        m += row;
    }
    for (k, &count) in classes.counts().iter().enumerate() {
        let mut m = class_means.row_mut(k);
        m /= count as f64;
    }

    let mut within = DMatrix::zeros(r, r);
    for (i, row) in z.row_iter().enumerate() {
        let dev = row - class_means.row(classes.of(i));
        within.ger(1.0, &dev.transpose(), &dev.transpose(), 1.0);
    }
    within /= (n - c) as f64;
    let mut between = DMatrix::zeros(r, r);
    for (k, &count) in classes.counts().iter().enumerate() {
        let m = class_means.row(k).transpose();
        between.ger(count as f64, &m, &m, 1.0);
    }
    between /= n as f64;

    let within = shrink(&within, gamma);
    let chol = within.clone().cholesky().ok_or_else(|| {
        Error::Numerical(format!(
            "shrunk within-class scatter is not positive definite at gamma = {gamma}; use a larger gamma"
        ))
    })?;
    let l = chol.l();
    let half = l
        .solve_lower_triangular(&between)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let whitened = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let whitened = (&whitened + whitened.transpose()) * 0.5;

    let eig = SymmetricEigen::new(whitened);
    let order = descending_order(eig.eigenvalues.as_slice());
    let lt = l.transpose();
    let mut directions = DMatrix::zeros(r, r);
    for (c, &i) in order.iter().enumerate() {
        let w = lt
            .solve_upper_triangular(&eig.eigenvectors.column(i).into_owned())
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        directions.set_column(c, &w);
    }
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    Ok(Discriminants {
        mean,
        reduction,
        eigenvalues,
        directions,
    })
}

pub fn fit_lda(
    embeddings: &[SyllableEmbedding],
    k: usize,
    gamma: f64,
    pca: PcaRank,
) -> Result<LdaModel> {
    let x = embedding_matrix(embeddings)?;
    let classes = ClassIndex::new(embeddings.iter().map(|e| e.label.as_str()));
    fit_lda_matrix(&x, &classes, k, gamma, pca)
}

pub(crate) fn fit_lda_matrix(
    x: &DMatrix<f64>,
    classes: &ClassIndex,
    k: usize,
    gamma: f64,
    pca: PcaRank,
) -> Result<LdaModel> {
    let c = classes.num_classes();
    if k == 0 || k + 1 > c {
        return Err(Error::param(
            "lda_dims",
            format!(
                "{k} directions requested but {c} classes allow at most {}",
                c.saturating_sub(1)
            ),
        ));
    }
    let disc = solve_discriminants(x, classes, gamma, pca)?;
    if k > disc.directions.ncols() {
        return Err(Error::param(
            "lda_dims",
            format!(
                "{k} directions requested but the reduced space has rank {}",
                disc.directions.ncols()
            ),
        ));
    }

    let top = disc.directions.columns(0, k).into_owned();
    let mut projection = match &disc.reduction {
        Some(p) => p * top,
        None => top,
    };
    for mut col in projection.column_iter_mut() {
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| {
                if v.abs() > best.1.abs() {
                    (i, v)
                } else {
                    best
                }
            })
            .1;
        if pivot < 0.0 {
            col.neg_mut();
        }
    }

    Ok(LdaModel {
        mean: disc.mean,
        projection,
        eigenvalues: disc.eigenvalues[..k].to_vec(),
        class_labels: classes.labels().to_vec(),
        gamma,
        pca_rank: disc.reduction.as_ref().map(|p| p.ncols()),
    })
}

/// Full descending generalized spectrum (all reduced-space eigenvalues), for
/// diagnostics such as checking the `c - 1` rank bound.
pub fn discriminant_spectrum(
    embeddings: &[SyllableEmbedding],
    gamma: f64,
    pca: PcaRank,
) -> Result<Vec<f64>> {
    let x = embedding_matrix(embeddings)?;
    let classes = ClassIndex::new(embeddings.iter().map(|e| e.label.as_str()));
    Ok(solve_discriminants(&x, &classes, gamma, pca)?.eigenvalues)
}

/// `(x - mean)^T W` for every row of `vectors` (`n × dim`), giving `n × k`.
pub fn project(model: &LdaModel, vectors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if vectors.ncols() != model.dim() {
        return Err(Error::Validation(format!(
            "vectors have dimension {}, model expects {}",
            vectors.ncols(),
            model.dim()
        )));
    }
    let mut centered = vectors.clone();
    for mut row in centered.row_iter_mut() {
        row -= model.mean.transpose();
    }
    Ok(centered * &model.projection)
}
