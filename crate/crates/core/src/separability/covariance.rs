use nalgebra::DMatrix;

use super::lda::shrink;
use crate::error::{Error, Result};

fn invert_spd(cov: DMatrix<f64>, gamma: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let chol = cov.clone().cholesky().ok_or_else(|| {
        Error::Numerical(format!(
            "covariance is singular after shrinkage gamma = {gamma}; use a larger gamma"
        ))
    })?;
    let inv = chol.inverse();
    Ok((cov, (&inv + inv.transpose()) * 0.5))
}

/// Pooled within-class covariance of the rows of `x` (divisor `n - c`),
/// shrunk toward `(trace/k) I` by `gamma`, with its inverse.
pub fn pooled_covariance(
    x: &DMatrix<f64>,
    labels: &[usize],
    gamma: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, k) = x.shape();
    if labels.len() != n {
        return Err(Error::Validation(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::param(
            "gamma_cov",
            format!("{gamma} is outside [0, 1]"),
        ));
    }
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; c];
    let mut sums = DMatrix::zeros(c, k);
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut s = sums.row_mut(l);
        s += x.row(i);
    }
    let present = counts.iter().filter(|&&m| m > 0).count();
    if n <= present {
        return Err(Error::Validation(format!(
            "{n} samples cannot estimate a pooled covariance over {present} classes"
        )));
    }
    let mut cov = DMatrix::zeros(k, k);
    for (i, &l) in labels.iter().enumerate() {
        let dev = (x.row(i) - sums.row(l) / counts[l] as f64).transpose();
        cov.ger(1.0, &dev, &dev, 1.0);
    }
    cov /= (n - present) as f64;
    invert_spd(shrink(&cov, gamma), gamma)
}

/// Covariance of all rows around the global mean (divisor `n - 1`), shrunk
/// like [`pooled_covariance`].
pub fn global_covariance(x: &DMatrix<f64>, gamma: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Validation(
            "global covariance needs at least 2 samples".into(),
        ));
    }
    pooled_covariance(x, &vec![0; n], gamma)
}

/// `sqrt((x - y)^T inv_cov (x - y))`.
pub fn mahalanobis(x: &[f64], y: &[f64], inv_cov: &DMatrix<f64>) -> f64 {
    let k = x.len();
    debug_assert_eq!(inv_cov.shape(), (k, k));
    let mut q = 0.0;
    for i in 0..k {
        let di = x[i] - y[i];
        let mut row = 0.0;
        for j in 0..k {
            row += inv_cov[(i, j)] * (x[j] - y[j]);
        }
        q += di * row;
    }
    q.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_single_class() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let (cov, inv) = pooled_covariance(&x, &[0, 0, 0, 0], 0.0).unwrap();
        // mean (0.5, 0.5); deviation sums 3 and -1 over divisor n - c = 3
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0 / 3.0, -1.0 / 3.0, 1.0]);
        assert!((&cov - &expected).abs().max() < 1e-15);
        assert!((cov * inv - DMatrix::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn identity_per_class_gives_identity() {
        // each class is a symmetric +-1 cross: sample covariance I per class
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in [(0usize, [0.0, 0.0]), (1, [10.0, -3.0])] {
            for p in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
                rows.extend([
                    center[0] + p[0] * 2f64.sqrt(),
                    center[1] + p[1] * 2f64.sqrt(),
                ]);
                labels.push(c);
            }
        }
        let x = DMatrix::from_row_slice(8, 2, &rows);
        let (cov, _) = pooled_covariance(&x, &labels, 0.0).unwrap();
        let expected = DMatrix::identity(2, 2) * (8.0 / 6.0);
        assert!((cov - expected).abs().max() < 1e-12);
    }

    #[test]
    fn full_shrinkage_is_scaled_identity() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        let (cov, _) = pooled_covariance(&x, &[0, 0, 0, 0], 1.0).unwrap();
        assert!((cov - DMatrix::identity(2, 2)).abs().max() < 1e-15);
    }

    #[test]
    fn singular_covariance_errors() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(matches!(
            pooled_covariance(&x, &[0, 0, 0], 0.0),
            Err(Error::Numerical(_))
        ));
        assert!(pooled_covariance(&x, &[0, 0, 0], 1e-6).is_ok());
        assert!(pooled_covariance(&x, &[0, 1, 2], 0.5).is_err());
    }

    #[test]
    fn mahalanobis_examples() {
        let id = DMatrix::identity(2, 2);
        assert_eq!(mahalanobis(&[0.0, 0.0], &[3.0, 4.0], &id), 5.0);
        let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.25, 1.0]));
        assert_eq!(mahalanobis(&[2.0, 0.0], &[0.0, 0.0], &inv), 1.0);
        let a = [0.3, -1.2];
        let b = [2.0, 0.7];
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert_eq!(mahalanobis(&a, &b, &m), mahalanobis(&b, &a, &m));
        assert_eq!(mahalanobis(&a, &a, &m), 0.0);
    }
}
