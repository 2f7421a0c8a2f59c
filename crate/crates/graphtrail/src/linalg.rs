//! Small dense linear algebra: symmetric eigendecomposition and square SVD.
//!
//! Everything here operates on d×d matrices where d is an embedding
//! dimension (tens, not thousands), so cyclic Jacobi sweeps are both simple
//! and fast enough.

use ndarray::{Array1, Array2, ArrayView2};

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[[i, j]] * a[[i, j]];
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in non-increasing order and the matching eigenvectors
/// as columns of the second matrix.
pub fn symmetric_eigen(m: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "symmetric_eigen needs a square matrix");
    let mut a = m.to_owned();
    let mut v: Array2<f64> = Array2::eye(n);
    let scale = frobenius(&a).max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        if off_diagonal_norm(&a) <= 1e-14 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).unwrap());
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, dst]] = v[[k, src]];
        }
    }
    (values, vectors)
}

/// SVD of a square matrix via one-sided Jacobi column orthogonalization.
///
/// Returns (U, singular values in non-increasing order, V) with M = U Σ Vᵀ.
/// Columns of U belonging to (near-)zero singular values are completed to an
/// orthonormal basis so U is always orthogonal.
pub fn svd_square(m: ArrayView2<'_, f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "svd_square needs a square matrix");
    let mut a = m.to_owned();
    let mut v: Array2<f64> = Array2::eye(n);
    let scale = frobenius(&a).max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for k in 0..n {
                    alpha += a[[k, p]] * a[[k, p]];
                    beta += a[[k, q]] * a[[k, q]];
                    gamma += a[[k, p]] * a[[k, q]];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt().max(1e-30 * scale * scale) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|k| a[[k, j]] * a[[k, j]]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());

    let mut u = Array2::zeros((n, n));
    let mut v_sorted = Array2::zeros((n, n));
    let tiny = 1e-12 * scale.max(1.0);
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        if s > tiny {
            for k in 0..n {
                u[[k, dst]] = a[[k, src]] / s;
            }
        }
        for k in 0..n {
            v_sorted[[k, dst]] = v[[k, src]];
        }
    }
    sigma.sort_by(|x, y| y.partial_cmp(x).unwrap());

    // Complete U where singular values vanished: Gram-Schmidt the standard
    // basis against the columns already present.
    for j in 0..n {
        if sigma[j] > tiny {
            continue;
        }
        for candidate in 0..n {
            let mut col: Vec<f64> = (0..n).map(|k| if k == candidate { 1.0 } else { 0.0 }).collect();
            // Columns are sorted by descending σ, so everything before j is
            // already filled in.
            for prev in 0..j {
                let dot: f64 = (0..n).map(|k| col[k] * u[[k, prev]]).sum();
                for (k, c) in col.iter_mut().enumerate() {
                    *c -= dot * u[[k, prev]];
                }
            }
            let norm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for (k, c) in col.iter().enumerate() {
                    u[[k, j]] = c / norm;
                }
                break;
            }
        }
    }

    (u, Array1::from_vec(sigma), v_sorted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn eigen_diagonal_matrix() {
        let m = arr2(&[[3.0, 0.0], [0.0, 1.0]]);
        let (vals, vecs) = symmetric_eigen(m.view());
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        assert!(vecs[[0, 0]].abs() > 0.999);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = arr2(&[
            [4.0, 1.0, 0.5],
            [1.0, 3.0, -0.2],
            [0.5, -0.2, 1.0],
        ]);
        let (vals, vecs) = symmetric_eigen(m.view());
        // M == V diag(vals) Vᵀ
        let mut rebuilt = Array2::<f64>::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    rebuilt[[i, j]] += vecs[[i, k]] * vals[k] * vecs[[j, k]];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((rebuilt[[i, j]] - m[[i, j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn svd_reconstructs_matrix() {
        let m = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        let (u, s, v) = svd_square(m.view());
        let mut rebuilt = Array2::<f64>::zeros((2, 2));
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    rebuilt[[i, j]] += u[[i, k]] * s[k] * v[[j, k]];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!((rebuilt[[i, j]] - m[[i, j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn svd_rank_deficient_still_orthogonal_u() {
        let m = arr2(&[[1.0, 2.0], [2.0, 4.0]]); // rank 1
        let (u, s, _v) = svd_square(m.view());
        assert!(s[1].abs() < 1e-10);
        let dot = u[[0, 0]] * u[[0, 1]] + u[[1, 0]] * u[[1, 1]];
        assert!(dot.abs() < 1e-9);
        let n1 = (u[[0, 1]] * u[[0, 1]] + u[[1, 1]] * u[[1, 1]]).sqrt();
        assert!((n1 - 1.0).abs() < 1e-9);
    }
}
