//! The alignment loop: similarities, k-nearest anchors, aggregation,
//! interpolation.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::embedding::EmbeddingSeries;
use crate::error::{Error, Result};
use crate::graph::DynamicGraph;
use crate::trajectory::{
    Aggregation, AlignmentConfig, AnchorPoint, AnchorSet, NodeTrack, TrajectoryMeta,
    TrajectorySet,
};

/// Cosine similarities of `v` against every row of `rows`, clamped to
/// [-1, 1]. Zero-norm rows (and a zero-norm `v`) contribute similarity 0 and
/// are counted in `zero_norm_count`.
#[derive(Debug, Clone)]
pub struct Similarities {
    pub values: Vec<f64>,
    pub zero_norm_count: usize,
}

pub fn cosine_similarities(v: ArrayView1<'_, f64>, rows: ArrayView2<'_, f64>) -> Similarities {
    let v_norm = v.dot(&v).sqrt();
    let mut values = Vec::with_capacity(rows.nrows());
    let mut zero_norm_count = 0;
    if v_norm == 0.0 {
        zero_norm_count += 1;
    }
    for row in rows.rows() {
        let r_norm = row.dot(&row).sqrt();
        if v_norm == 0.0 || r_norm == 0.0 {
            if r_norm == 0.0 {
                zero_norm_count += 1;
            }
            values.push(0.0);
        } else {
            values.push((v.dot(&row) / (v_norm * r_norm)).clamp(-1.0, 1.0));
        }
    }
    Similarities { values, zero_norm_count }
}

/// Indices of the k largest similarities, descending, ties broken by
/// ascending index, `self_index` excluded.
pub fn knn_anchors(similarities: &[f64], k: usize, self_index: Option<usize>) -> Result<Vec<usize>> {
    let mut candidates: Vec<usize> = (0..similarities.len())
        .filter(|&i| Some(i) != self_index)
        .collect();
    if k == 0 || k > candidates.len() {
        return Err(Error::validation(format!(
            "k={k} out of range for {} candidate anchors",
            candidates.len()
        )));
    }
    let by_rank = |&a: &usize, &b: &usize| {
        similarities[b]
            .partial_cmp(&similarities[a])
            .expect("similarities are finite")
            .then(a.cmp(&b))
    };
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, by_rank);
        candidates.truncate(k);
    }
    candidates.sort_by(by_rank);
    Ok(candidates)
}

/// Collapses the neighbors' anchor positions into one point: unweighted mean,
/// or a softmax over similarities (convex either way).
pub fn aggregate(
    neighbors: &[usize],
    similarities: &[f64],
    positions: ArrayView2<'_, f64>,
    mode: &Aggregation,
) -> (f64, f64) {
    assert!(!neighbors.is_empty(), "aggregate needs at least one neighbor");
    match mode {
        Aggregation::Mean => {
            let mut x = 0.0;
            let mut y = 0.0;
            for &n in neighbors {
                x += positions[[n, 0]];
                y += positions[[n, 1]];
            }
            let m = neighbors.len() as f64;
            (x / m, y / m)
        }
        Aggregation::SimilaritySoftmax { tau } => {
            let max = neighbors
                .iter()
                .map(|&n| similarities[n] / tau)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            let mut x = 0.0;
            let mut y = 0.0;
            for &n in neighbors {
                let w = ((similarities[n] / tau) - max).exp();
                total += w;
                x += w * positions[[n, 0]];
                y += w * positions[[n, 1]];
            }
            (x / total, y / total)
        }
    }
}

/// Anchors blend their static spot with the aggregate; everything else takes
/// the aggregate as is.
pub fn interpolate(
    z_static: Option<(f64, f64)>,
    z_agg: (f64, f64),
    alpha: f64,
    is_anchor: bool,
) -> (f64, f64) {
    match (is_anchor, z_static) {
        (true, Some(zs)) => (
            alpha * zs.0 + (1.0 - alpha) * z_agg.0,
            alpha * zs.1 + (1.0 - alpha) * z_agg.1,
        ),
        _ => z_agg,
    }
}

/// Runs the full alignment over every timestamp and node.
///
/// Similarities are taken between temporal embeddings at the same t;
/// anchors absent at a t are skipped there and surface as a coverage
/// warning. Errors if fewer than k anchors are usable for some node.
pub fn compute_trajectories(
    graph: &DynamicGraph,
    series: &EmbeddingSeries,
    anchors: &AnchorSet,
    cfg: &AlignmentConfig,
) -> Result<TrajectorySet> {
    cfg.validate()?;
    series.check_alignment(graph)?;
    if anchors.len() <= cfg.k {
        return Err(Error::validation(format!(
            "{} anchors cannot serve k={}",
            anchors.len(),
            cfg.k
        )));
    }

    let mut warnings = Vec::new();
    let mut tracks: Vec<NodeTrack> = Vec::new();
    let mut track_of_id: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();

    for (t, matrix) in series.matrices().iter().enumerate() {
        // Anchors present at this timestamp, in anchor-set order.
        let present: Vec<(usize, usize)> = anchors
            .ids
            .iter()
            .enumerate()
            .filter_map(|(a_idx, &id)| matrix.row_of(id).map(|row| (a_idx, row)))
            .collect();
        if present.len() < anchors.len() {
            warnings.push(format!(
                "t={t}: {} of {} anchors absent",
                anchors.len() - present.len(),
                anchors.len()
            ));
        }
        if present.len() < cfg.k {
            return Err(Error::validation(format!(
                "t={t}: only {} anchors present, need at least k={}",
                present.len(),
                cfg.k
            )));
        }
        let dim = series.dim();
        let mut anchor_rows = Array2::zeros((present.len(), dim));
        for (slot, &(_, row)) in present.iter().enumerate() {
            anchor_rows.row_mut(slot).assign(&matrix.rows.row(row));
        }
        let slot_positions = {
            let mut z = Array2::zeros((present.len(), 2));
            for (slot, &(a_idx, _)) in present.iter().enumerate() {
                z[[slot, 0]] = anchors.positions[[a_idx, 0]];
                z[[slot, 1]] = anchors.positions[[a_idx, 1]];
            }
            z
        };
        let slot_of_id: std::collections::HashMap<usize, usize> = present
            .iter()
            .enumerate()
            .map(|(slot, &(a_idx, _))| (anchors.ids[a_idx], slot))
            .collect();

        let placed: Vec<(usize, f64, f64, usize)> = matrix
            .ids()
            .par_iter()
            .map(|&id| -> Result<(usize, f64, f64, usize)> {
                let v = matrix.vector(id).expect("id is in matrix");
                let sims = cosine_similarities(v, anchor_rows.view());
                let self_slot = slot_of_id.get(&id).copied();
                let neighbors = knn_anchors(&sims.values, cfg.k, self_slot).map_err(|_| {
                    Error::validation(format!(
                        "t={t}: fewer than k={} anchors usable for node {id}",
                        cfg.k
                    ))
                })?;
                let z_agg =
                    aggregate(&neighbors, &sims.values, slot_positions.view(), &cfg.aggregation);
                let anchor_index = anchors.index_of(id);
                let z_static = anchor_index
                    .map(|a| (anchors.positions[[a, 0]], anchors.positions[[a, 1]]));
                let (x, y) =
                    interpolate(z_static, z_agg, cfg.alpha, anchor_index.is_some());
                if !(x.is_finite() && y.is_finite()) {
                    return Err(Error::numeric(
                        "compute_trajectories",
                        format!("non-finite position for node {id} at t={t}"),
                    ));
                }
                Ok((id, x, y, sims.zero_norm_count))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut zero_norms = 0;
        for (id, x, y, zn) in placed {
            zero_norms += zn;
            let track_idx = *track_of_id.entry(id).or_insert_with(|| {
                tracks.push(NodeTrack {
                    id,
                    label: graph
                        .registry
                        .label(id)
                        .map(str::to_string)
                        .unwrap_or_else(|| id.to_string()),
                    points: Vec::new(),
                });
                tracks.len() - 1
            });
            tracks[track_idx].points.push((t, x, y));
        }
        if zero_norms > 0 {
            warnings.push(format!("t={t}: {zero_norms} zero-norm vectors in similarity"));
        }
    }

    tracks.sort_by_key(|tr| tr.id);
    let anchor_points = anchors
        .ids
        .iter()
        .enumerate()
        .map(|(i, &id)| AnchorPoint {
            label: graph
                .registry
                .label(id)
                .map(str::to_string)
                .unwrap_or_else(|| id.to_string()),
            x: anchors.positions[[i, 0]],
            y: anchors.positions[[i, 1]],
        })
        .collect();

    Ok(TrajectorySet {
        meta: TrajectoryMeta {
            method: anchors.projection_method.clone(),
            k: cfg.k,
            alpha: cfg.alpha,
            aggregation: cfg.aggregation.describe(),
            anchor_count: anchors.len(),
            reference_t: anchors.reference_t,
        },
        anchors: anchor_points,
        nodes: tracks,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn cosine_of_identical_vector_is_one() {
        let rows = arr2(&[[1.0, 2.0], [0.0, 1.0]]);
        let sims = cosine_similarities(rows.row(0), rows.view());
        assert!((sims.values[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_of_orthogonal_vectors_is_zero() {
        let rows = arr2(&[[0.0, 1.0]]);
        let v = ndarray::arr1(&[1.0, 0.0]);
        let sims = cosine_similarities(v.view(), rows.view());
        assert_eq!(sims.values[0], 0.0);
    }

    #[test]
    fn cosine_45_degrees() {
        let rows = arr2(&[[1.0, 1.0]]);
        let v = ndarray::arr1(&[1.0, 0.0]);
        let sims = cosine_similarities(v.view(), rows.view());
        assert!((sims.values[0] - 0.707_106_78).abs() < 1e-8);
        assert!((sims.values[0] - 1.0 / 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_norm_rows_are_flagged() {
        let rows = arr2(&[[0.0, 0.0], [1.0, 0.0]]);
        let v = ndarray::arr1(&[1.0, 0.0]);
        let sims = cosine_similarities(v.view(), rows.view());
        assert_eq!(sims.values[0], 0.0);
        assert_eq!(sims.zero_norm_count, 1);
    }

    #[test]
    fn knn_orders_by_similarity_then_index() {
        let order = knn_anchors(&[0.9, 0.5, 0.1], 2, None).unwrap();
        assert_eq!(order, vec![0, 1]);
        let single = knn_anchors(&[0.1, 0.9], 1, None).unwrap();
        assert_eq!(single, vec![1]);
        let tie = knn_anchors(&[0.5, 0.5], 1, None).unwrap();
        assert_eq!(tie, vec![0]);
    }

    #[test]
    fn knn_excludes_self_and_validates_k() {
        let order = knn_anchors(&[1.0, 0.2, 0.8], 2, Some(0)).unwrap();
        assert_eq!(order, vec![2, 1]);
        assert!(knn_anchors(&[1.0, 0.2], 2, Some(0)).is_err());
        assert!(knn_anchors(&[1.0], 2, None).is_err());
    }

    #[test]
    fn mean_aggregation_is_the_midpoint() {
        let z = arr2(&[[0.0, 0.0], [2.0, 2.0]]);
        let (x, y) = aggregate(&[0, 1], &[0.5, 0.5], z.view(), &Aggregation::Mean);
        assert_eq!((x, y), (1.0, 1.0));
    }

    #[test]
    fn single_neighbor_is_exact_in_either_mode() {
        let z = arr2(&[[3.5, -1.0]]);
        for mode in [Aggregation::Mean, Aggregation::SimilaritySoftmax { tau: 0.1 }] {
            let (x, y) = aggregate(&[0], &[0.3], z.view(), &mode);
            assert_eq!((x, y), (3.5, -1.0));
        }
    }

    #[test]
    fn softmax_with_huge_tau_matches_mean() {
        let z = arr2(&[[0.0, 0.0], [1.0, 1.0], [-1.0, 0.5]]);
        let sims = [0.9, 0.2, -0.5];
        let neighbors = [0, 1, 2];
        let mean = aggregate(&neighbors, &sims, z.view(), &Aggregation::Mean);
        let soft = aggregate(
            &neighbors,
            &sims,
            z.view(),
            &Aggregation::SimilaritySoftmax { tau: 1e6 },
        );
        assert!((mean.0 - soft.0).abs() < 1e-6);
        assert!((mean.1 - soft.1).abs() < 1e-6);
    }

    #[test]
    fn interpolate_matches_the_case_split() {
        // anchors with alpha=1 stay put
        assert_eq!(interpolate(Some((3.0, 4.0)), (9.0, 9.0), 1.0, true), (3.0, 4.0));
        // non-anchors ignore alpha entirely
        assert_eq!(interpolate(None, (9.0, 9.0), 0.7, false), (9.0, 9.0));
        // convex combination for anchors
        assert_eq!(interpolate(Some((0.0, 0.0)), (2.0, 4.0), 0.5, true), (1.0, 2.0));
    }
}
