//! PCA onto the top two principal axes, via the explicit d×d covariance and
//! a Jacobi eigendecomposition (d is small; N dominates the cost).

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::projection::Projection2D;

/// Projects mean-centered rows onto the two leading eigenvectors of the
/// sample covariance. Sign convention: each eigenvector's
/// largest-magnitude entry is positive.
pub fn pca_project(x: ArrayView2<'_, f64>) -> Result<Projection2D> {
    let n = x.nrows();
    let d = x.ncols();
    if n < 3 {
        return Err(Error::validation(format!("pca needs at least 3 rows, got {n}")));
    }
    if d < 2 {
        return Err(Error::validation(format!("pca needs at least 2 columns, got {d}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("pca input contains non-finite values"));
    }

    let mean: Array1<f64> = x.mean_axis(ndarray::Axis(0)).expect("n >= 3");
    let centered = &x - &mean.view().insert_axis(ndarray::Axis(0));
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    if cov.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-300 {
        return Err(Error::numeric("pca_project", "degenerate covariance".to_string()));
    }

    let (_values, vectors) = symmetric_eigen(cov.view());
    let mut basis = Array2::zeros((d, 2));
    for c in 0..2 {
        let mut col: Vec<f64> = (0..d).map(|r| vectors[[r, c]]).collect();
        // first index of the largest-magnitude entry decides the sign
        let mut arg = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[arg].abs() {
                arg = i;
            }
        }
        if col[arg] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        for (r, v) in col.into_iter().enumerate() {
            basis[[r, c]] = v;
        }
    }

    Ok(Projection2D { coords: centered.dot(&basis), fingerprint: "pca".to_string() })
}

/// Sample variances of the two output columns, i.e. the explained variances.
pub fn explained_variance(p: &Projection2D) -> (f64, f64) {
    let n = p.coords.nrows() as f64;
    let var = |c: usize| {
        let mean = p.coords.column(c).sum() / n;
        p.coords.column(c).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    };
    (var(0), var(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn line_y_equals_x_collapses_to_one_axis() {
        let x = arr2(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        let p = pca_project(x.view()).unwrap();
        // second column carries no variance
        for v in p.coords.column(1) {
            assert!(v.abs() < 1e-9, "residual {v}");
        }
        let (v1, v2) = explained_variance(&p);
        // covariance [[v,v],[v,v]] with v = var(0..3 scaled) has eigenvalues (2v, 0)
        let base: f64 = {
            let vals = [0.0, 1.0, 2.0, 3.0];
            let mean = 1.5;
            vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 3.0
        };
        assert!((v1 - 2.0 * base).abs() < 1e-9);
        assert!(v2.abs() < 1e-18);
    }

    #[test]
    fn axis_aligned_centered_data_is_preserved_up_to_sign() {
        let x = arr2(&[[2.0, 0.5], [-2.0, -0.5], [1.0, -0.25], [-1.0, 0.25]]);
        let p = pca_project(x.view()).unwrap();
        // var(x1) > var(x2); the covariance is not exactly diagonal here, so
        // just check the first axis dominates and columns are centered
        for c in 0..2 {
            let mean: f64 = p.coords.column(c).sum() / 4.0;
            assert!(mean.abs() < 1e-9);
        }
        let (v1, v2) = explained_variance(&p);
        assert!(v1 >= v2);
    }

    #[test]
    fn truly_diagonal_covariance_keeps_coordinates() {
        // columns uncorrelated by construction, var(col0) > var(col1)
        let x = arr2(&[[3.0, 1.0], [-3.0, 1.0], [3.0, -1.0], [-3.0, -1.0]]);
        let p = pca_project(x.view()).unwrap();
        for r in 0..4 {
            assert!((p.coords[[r, 0]] - x[[r, 0]]).abs() < 1e-12);
            assert!((p.coords[[r, 1]] - x[[r, 1]]).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let x = arr2(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]);
        let err = pca_project(x.view()).unwrap_err();
        assert!(err.to_string().contains("degenerate covariance"));
    }

    #[test]
    fn translation_invariance() {
        let x = arr2(&[[0.1, 0.9, 2.0], [1.4, -0.3, 0.5], [2.2, 0.8, -1.0], [-0.7, 1.1, 0.4]]);
        let shifted = &x + &arr2(&[[100.0, -20.0, 3.5]]);
        let a = pca_project(x.view()).unwrap();
        let b = pca_project(shifted.view()).unwrap();
        for (p, q) in a.coords.iter().zip(b.coords.iter()) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn output_columns_are_orthogonal_and_variance_ordered() {
        let x = arr2(&[
            [0.5, 1.0, -0.2, 0.8],
            [1.5, -1.0, 0.7, 0.1],
            [-0.5, 0.4, 1.2, -0.9],
            [2.5, 0.1, -0.6, 0.3],
            [-1.0, -0.8, 0.9, 1.1],
        ]);
        let p = pca_project(x.view()).unwrap();
        let c0 = p.coords.column(0);
        let c1 = p.coords.column(1);
        let dot = c0.dot(&c1);
        let norms = c0.dot(&c0).sqrt() * c1.dot(&c1).sqrt();
        assert!(dot.abs() <= 1e-9 * norms.max(1.0));
        let (v1, v2) = explained_variance(&p);
        assert!(v1 >= v2);
    }
}
