//! Orthogonal Procrustes alignment, the classical baseline for comparing
//! embedding spaces pairwise.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::svd_square;

/// Finds the orthogonal matrix R minimizing `||A R - B||_F` via the SVD of
/// AᵀB (R = U Vᵀ), and returns it with the achieved residual.
pub fn procrustes_align(
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, f64)> {
    if a.shape() != b.shape() {
        return Err(Error::validation(format!(
            "shape mismatch: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let cross = a.t().dot(&b);
    let scale: f64 = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale < 1e-300 {
        return Err(Error::numeric(
            "procrustes_align",
            "degenerate (zero) cross-covariance".to_string(),
        ));
    }
    let (u, _sigma, v) = svd_square(cross.view());
    let r = u.dot(&v.t());
    let aligned = a.dot(&r);
    let residual = (&aligned - &b).iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((r, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut m = Array2::zeros((n, d));
        m.mapv_inplace(|_| rng.random::<f64>() * 2.0 - 1.0);
        m
    }

    /// Random orthogonal matrix from the QR-free route: orthonormalize
    /// Gaussian columns with Gram-Schmidt.
    pub(crate) fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut q = Array2::<f64>::zeros((d, d));
        for j in 0..d {
            let mut col: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            for prev in 0..j {
                let dot: f64 = (0..d).map(|k| col[k] * q[[k, prev]]).sum();
                for (k, c) in col.iter_mut().enumerate() {
                    *c -= dot * q[[k, prev]];
                }
            }
            let norm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (k, c) in col.iter().enumerate() {
                q[[k, j]] = c / norm;
            }
        }
        q
    }

    #[test]
    fn recovers_an_exact_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(40, 6, &mut rng);
        let q = random_orthogonal(6, &mut rng);
        let b = a.dot(&q);
        let (r, residual) = procrustes_align(a.view(), b.view()).unwrap();
        assert!(residual <= 1e-6, "residual {residual}");
        let recovered = a.dot(&r);
        for (x, y) in recovered.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn identity_when_b_equals_a() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_matrix(25, 5, &mut rng);
        let (r, _) = procrustes_align(a.view(), a.view()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((r[[i, j]] - expect).abs() < 1e-9, "r[{i},{j}] = {}", r[[i, j]]);
            }
        }
    }

    #[test]
    fn zero_cross_covariance_is_an_error() {
        let a = Array2::zeros((4, 3));
        let b = Array2::zeros((4, 3));
        assert!(procrustes_align(a.view(), b.view()).is_err());
    }
}
