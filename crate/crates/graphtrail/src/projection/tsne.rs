//! Exact (quadratic) t-SNE with perplexity-calibrated Gaussian affinities,
//! early exaggeration, momentum + per-coordinate gains, and a recorded KL
//! trace. Deterministic for a fixed seed regardless of thread count: all
//! parallel loops are per-row with sequential reductions.

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::Projection2D;

const Q_FLOOR: f64 = 1e-12;
const PERPLEXITY_TOL_LOG2: f64 = 1e-5;
const MAX_BISECTION_STEPS: usize = 200;
const RECENTER_EVERY: usize = 50;
const KL_RECORD_EVERY: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub early_exaggeration_factor: f64,
    pub early_exaggeration_iters: usize,
    /// None picks max(N/12, 50).
    pub learning_rate: Option<f64>,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    pub rng_seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            early_exaggeration_factor: 12.0,
            early_exaggeration_iters: 250,
            learning_rate: None,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            rng_seed: 42,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < self.early_exaggeration_iters {
            return Err(Error::validation(format!(
                "iterations {} < early_exaggeration_iters {}",
                self.iterations, self.early_exaggeration_iters
            )));
        }
        if !(self.perplexity.is_finite() && self.perplexity > 0.0) {
            return Err(Error::validation("perplexity must be positive"));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "tsne(perplexity={},iterations={},ee={}x{},lr={},momentum={}->{}@{},seed={})",
            self.perplexity,
            self.iterations,
            self.early_exaggeration_factor,
            self.early_exaggeration_iters,
            self.learning_rate.map_or("auto".to_string(), |v| v.to_string()),
            self.momentum_initial,
            self.momentum_final,
            self.momentum_switch_iter,
            self.rng_seed
        )
    }
}

/// Calibrated input-space affinities.
#[derive(Debug, Clone)]
pub struct Affinities {
    /// Row-normalized conditionals P(j|i); diagonal zero.
    pub conditional: Array2<f64>,
    /// Per-point precisions beta_i = 1 / (2 sigma_i^2).
    pub betas: Vec<f64>,
    /// Symmetrized joint P; sums to 1.
    pub joint: Array2<f64>,
}

fn pairwise_squared_distances(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let diff = &xi - &x.row(j);
                        diff.dot(&diff)
                    }
                })
                .collect()
        })
        .collect();
    let mut d = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            d[[i, j]] = v;
        }
    }
    d
}

/// Entropy (nats) and normalized row for one point at a given precision.
fn row_entropy(dist_row: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, &d) in dist_row.iter().enumerate() {
        if j == i {
            out[j] = 0.0;
            continue;
        }
        let p = (-beta * d).exp();
        out[j] = p;
        sum += p;
        weighted += d * p;
    }
    if sum <= 0.0 {
        for v in out.iter_mut() {
            *v = 0.0;
        }
        return f64::NEG_INFINITY;
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
    sum.ln() + beta * weighted / sum
}

/// Binary-searches sigma_i per point so the conditional distribution hits the
/// target perplexity within 1e-5 in log2 space.
pub fn gaussian_affinities(x: ArrayView2<'_, f64>, perplexity: f64) -> Result<Affinities> {
    let n = x.nrows();
    if n < 3 {
        return Err(Error::validation("affinities need at least 3 points"));
    }
    let distances = pairwise_squared_distances(x);
    let target_log2 = perplexity.log2();

    let results: Vec<Result<(Vec<f64>, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist_row: Vec<f64> = distances.row(i).to_vec();
            let mut row = vec![0.0; n];
            let mut beta = 1.0;
            let mut beta_min = f64::NEG_INFINITY;
            let mut beta_max = f64::INFINITY;
            for _ in 0..MAX_BISECTION_STEPS {
                let entropy = row_entropy(&dist_row, i, beta, &mut row);
                let log2_perp = entropy / std::f64::consts::LN_2;
                let diff = log2_perp - target_log2;
                if diff.abs() <= PERPLEXITY_TOL_LOG2 {
                    return Ok((row, beta));
                }
                if diff > 0.0 {
                    // too spread out: sharpen
                    beta_min = beta;
                    beta = if beta_max.is_infinite() { beta * 2.0 } else { (beta + beta_max) / 2.0 };
                } else {
                    beta_max = beta;
                    beta = if beta_min == f64::NEG_INFINITY {
                        beta / 2.0
                    } else {
                        (beta + beta_min) / 2.0
                    };
                }
            }
            Err(Error::numeric(
                "tsne_project",
                format!(
                    "sigma search for point {i} did not converge after {MAX_BISECTION_STEPS} bisection steps"
                ),
            ))
        })
        .collect();

    let mut conditional = Array2::zeros((n, n));
    let mut betas = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        let (row, beta) = r?;
        for (j, v) in row.into_iter().enumerate() {
            conditional[[i, j]] = v;
        }
        betas.push(beta);
    }

    let mut joint = Array2::zeros((n, n));
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        for j in 0..n {
            joint[[i, j]] = (conditional[[i, j]] + conditional[[j, i]]) * scale;
        }
    }
    Ok(Affinities { conditional, betas, joint })
}

/// Full t-SNE output including the KL objective trace
/// (`(iteration, kl)` recorded every 10 iterations).
#[derive(Debug, Clone)]
pub struct TsneRun {
    pub coords: Array2<f64>,
    pub kl_trace: Vec<(usize, f64)>,
}

fn kl_divergence(p: &Array2<f64>, num: &Array2<f64>, num_total: f64) -> f64 {
    let n = p.nrows();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[[i, j]];
            if pij > 0.0 {
                let qij = (num[[i, j]] / num_total).max(Q_FLOOR);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

fn recenter(y: &mut Array2<f64>) {
    let mean = y.mean_axis(Axis(0)).expect("non-empty");
    for mut row in y.rows_mut() {
        row -= &mean;
    }
}

pub fn tsne_run(x: ArrayView2<'_, f64>, cfg: &TsneConfig) -> Result<TsneRun> {
    cfg.validate()?;
    let n = x.nrows();
    if n < 10 {
        return Err(Error::validation(format!("tsne needs at least 10 points, got {n}")));
    }
    let perplexity = cfg.perplexity.min((n as f64 - 1.0) / 3.0);
    if perplexity < 2.0 {
        return Err(Error::validation(format!(
            "perplexity {perplexity} after clamping is below 2"
        )));
    }

    let affinities = gaussian_affinities(x, perplexity)?;
    let p = affinities.joint;

    let lr = cfg.learning_rate.unwrap_or_else(|| (n as f64 / 12.0).max(50.0));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let init = Normal::new(0.0, 1e-4).expect("valid std");
    let mut y = Array2::zeros((n, 2));
    y.mapv_inplace(|_| init.sample(&mut rng));
    let mut velocity = Array2::<f64>::zeros((n, 2));
    let mut gains = Array2::<f64>::from_elem((n, 2), 1.0);
    let mut kl_trace = Vec::new();

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.early_exaggeration_iters {
            cfg.early_exaggeration_factor
        } else {
            1.0
        };
        let momentum = if iter < cfg.momentum_switch_iter {
            cfg.momentum_initial
        } else {
            cfg.momentum_final
        };

        // Student-t numerators and their per-row sums; total is reduced
        // sequentially so thread count cannot change the float result.
        let num_rows: Vec<(Vec<f64>, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let yi = [y[[i, 0]], y[[i, 1]]];
                let mut row = vec![0.0; n];
                let mut sum = 0.0;
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let dx = yi[0] - y[[j, 0]];
                    let dy = yi[1] - y[[j, 1]];
                    let v = 1.0 / (1.0 + dx * dx + dy * dy);
                    row[j] = v;
                    sum += v;
                }
                (row, sum)
            })
            .collect();
        let mut num = Array2::zeros((n, n));
        let mut num_total = 0.0;
        for (i, (row, sum)) in num_rows.iter().enumerate() {
            num_total += sum;
            for (j, &v) in row.iter().enumerate() {
                num[[i, j]] = v;
            }
        }

        if (iter + 1) % KL_RECORD_EVERY == 0 || iter + 1 == cfg.iterations {
            kl_trace.push((iter + 1, kl_divergence(&p, &num, num_total)));
        }

        let grad_rows: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let yi = [y[[i, 0]], y[[i, 1]]];
                let mut g = [0.0, 0.0];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let qij = (num[[i, j]] / num_total).max(Q_FLOOR);
                    let factor = 4.0 * (exaggeration * p[[i, j]] - qij) * num[[i, j]];
                    g[0] += factor * (yi[0] - y[[j, 0]]);
                    g[1] += factor * (yi[1] - y[[j, 1]]);
                }
                g
            })
            .collect();

        for i in 0..n {
            for c in 0..2 {
                let g = grad_rows[i][c];
                let same_sign = (g > 0.0) == (velocity[[i, c]] > 0.0);
                gains[[i, c]] = if same_sign {
                    (gains[[i, c]] * 0.8).max(0.01)
                } else {
                    gains[[i, c]] + 0.2
                };
                velocity[[i, c]] = momentum * velocity[[i, c]] - lr * gains[[i, c]] * g;
                y[[i, c]] += velocity[[i, c]];
            }
        }

        if (iter + 1) % RECENTER_EVERY == 0 {
            recenter(&mut y);
        }
    }
    recenter(&mut y);

    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("tsne_project", "non-finite coordinates".to_string()));
    }
    Ok(TsneRun { coords: y, kl_trace })
}

pub fn tsne_project(x: ArrayView2<'_, f64>, cfg: &TsneConfig) -> Result<Projection2D> {
    let run = tsne_run(x, cfg)?;
    Ok(Projection2D { coords: run.coords, fingerprint: cfg.fingerprint() })
}

/// log2 perplexity of one conditional row (test and calibration helper).
pub fn log2_perplexity(row: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in row {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};
    use rand::{Rng, SeedableRng};

    #[test]
    fn equidistant_triple_has_uniform_conditionals() {
        // equilateral triangle: every conditional is exactly 1/2 at any beta
        let x = arr2(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.75_f64.sqrt()]]);
        let aff = gaussian_affinities(x.view(), 2.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(
                        (aff.conditional[[i, j]] - 0.5).abs() < 1e-12,
                        "P({j}|{i}) = {}",
                        aff.conditional[[i, j]]
                    );
                }
            }
        }
    }

    #[test]
    fn calibration_hits_target_perplexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = Array2::<f64>::zeros((40, 6));
        x.mapv_inplace(|_| rng.random());
        let target = 8.0;
        let aff = gaussian_affinities(x.view(), target).unwrap();
        for i in 0..40 {
            let row: Vec<f64> = aff.conditional.row(i).to_vec();
            assert!(
                (log2_perplexity(&row) - target.log2()).abs() <= 1e-5,
                "row {i} perplexity off"
            );
        }
    }

    #[test]
    fn joint_p_is_symmetric_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut x = Array2::<f64>::zeros((25, 4));
        x.mapv_inplace(|_| rng.random());
        let aff = gaussian_affinities(x.view(), 5.0).unwrap();
        let total: f64 = aff.joint.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        for i in 0..25 {
            for j in 0..25 {
                assert!(aff.joint[[i, j]] >= 0.0);
                assert!((aff.joint[[i, j]] - aff.joint[[j, i]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn small_n_is_rejected() {
        let x = Array2::<f64>::zeros((5, 3));
        assert!(tsne_run(x.view(), &TsneConfig::default()).is_err());
    }

    #[test]
    fn degenerate_duplicates_fail_sigma_search() {
        // all points identical: entropy is pinned at log2(n-1), so a small
        // perplexity target can never converge
        let x = Array2::<f64>::zeros((12, 3));
        let err = gaussian_affinities(x.view(), 3.0).unwrap_err();
        assert!(err.to_string().contains("bisection"));
    }
}
