use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Silhouette coefficient of every sample given pairwise distances.
///
/// `a` is the mean distance to the other members of the sample's cluster,
/// `b` the smallest mean distance to any other cluster, and
/// `s = (b - a) / max(a, b)`. Members of singleton clusters, and samples with
/// `a = b = 0`, score 0.
pub fn silhouettes(distance: &DMatrix<f64>, labels: &[usize]) -> Result<Vec<f64>> {
    let n = labels.len();
    if distance.shape() != (n, n) {
        return Err(Error::Validation(format!(
            "distance matrix is {}x{}, expected {n}x{n}",
            distance.nrows(),
            distance.ncols()
        )));
    }
    if let Some(i) = (0..n).find(|&i| distance[(i, i)] != 0.0) {
        return Err(Error::Validation(format!(
            "distance matrix diagonal is nonzero at {i}"
        )));
    }
    silhouettes_with(labels, |i, j| distance[(i, j)])
}

/// [`silhouettes`] over an implicit distance function, which lets bootstrap
/// resamples index into a fixed matrix without copying it.
pub fn silhouettes_with(labels: &[usize], dist: impl Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let n = labels.len();
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; c];
    for &l in labels {
        counts[l] += 1;
    }
    if counts.iter().filter(|&&m| m > 0).count() < 2 {
        return Err(Error::Validation(
            "silhouettes need at least 2 clusters".into(),
        ));
    }

    let mut sums = vec![0.0; c];
    Ok((0..n)
        .map(|i| {
            let own = labels[i];
            if counts[own] < 2 {
                return 0.0;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += dist(i, j);
                }
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let b = (0..c)
                .filter(|&k| k != own && counts[k] > 0)
                .map(|k| sums[k] / counts[k] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        })
        .collect())
}
