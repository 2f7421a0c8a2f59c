//! Anchor selection from the first snapshot.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingSeries;
use crate::error::{Error, Result};
use crate::graph::DynamicGraph;
use crate::projection::{project, ProjectionConfig};
use crate::trajectory::{AlignmentConfig, AnchorSet, AnchorStrategy};

const AUTO_CAP: usize = 5000;

fn pick_ids(graph: &DynamicGraph, strategy: &AnchorStrategy) -> Result<Vec<usize>> {
    let snapshot0 = graph
        .snapshot(0)
        .ok_or_else(|| Error::validation("graph has no snapshots"))?;
    let candidates: Vec<usize> = snapshot0.node_mask.iter().copied().collect();
    if candidates.is_empty() {
        return Err(Error::validation("snapshot 0 is empty; no anchor candidates"));
    }
    let ids = match strategy {
        AnchorStrategy::Auto => {
            if candidates.len() <= AUTO_CAP {
                candidates
            } else {
                return pick_ids(graph, &AnchorStrategy::TopDegree { cap: AUTO_CAP });
            }
        }
        AnchorStrategy::AllV0 => candidates,
        AnchorStrategy::TopDegree { cap } => {
            let mut ranked: Vec<(usize, usize)> = candidates
                .iter()
                .map(|&id| (graph.total_degree(id), id))
                .collect();
            ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut ids: Vec<usize> =
                ranked.into_iter().take(*cap).map(|(_, id)| id).collect();
            ids.sort_unstable();
            ids
        }
        AnchorStrategy::Random { cap, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut pool = candidates;
            pool.shuffle(&mut rng);
            pool.truncate(*cap);
            pool.sort_unstable();
            pool
        }
    };
    Ok(ids)
}

/// Chooses anchor ids from V^0, takes their rows at `reference_t` as X, and
/// projects X into the static 2D frame Z.
pub fn select_anchors(
    graph: &DynamicGraph,
    series: &EmbeddingSeries,
    cfg: &AlignmentConfig,
    projection: &ProjectionConfig,
) -> Result<AnchorSet> {
    cfg.validate()?;
    let ids = pick_ids(graph, &cfg.anchor_strategy)?;
    if ids.len() <= cfg.k {
        return Err(Error::validation(format!(
            "{} anchor candidates cannot serve k={} (need at least k+1)",
            ids.len(),
            cfg.k
        )));
    }
    let reference = series.matrix(cfg.reference_t).ok_or_else(|| {
        Error::validation(format!(
            "reference_t={} outside the series (len {})",
            cfg.reference_t,
            series.len()
        ))
    })?;
    let dim = series.dim();
    let mut x = Array2::zeros((ids.len(), dim));
    for (i, &id) in ids.iter().enumerate() {
        let row = reference.vector(id).ok_or_else(|| {
            Error::validation(format!(
                "anchor node {id} missing from the reference embeddings at t={}",
                cfg.reference_t
            ))
        })?;
        x.row_mut(i).assign(&row);
    }
    let projected = project(x.view(), projection)?;
    Ok(AnchorSet {
        ids,
        reference_t: cfg.reference_t,
        reference_embeddings: x,
        positions: projected.coords,
        projection_method: projected.fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{EmbeddingMatrix, EmbeddingSeries};
    use crate::graph::{DynamicGraph, Edge, NodeRegistry, Snapshot};
    use crate::projection::{ProjectionConfig, ProjectionMethod};
    use ndarray::Array2;
    use rand::Rng;

    fn star_graph(leaves: usize) -> DynamicGraph {
        let mut registry = NodeRegistry::new();
        let center = registry.intern("center");
        let edges: Vec<Edge> = (0..leaves)
            .map(|i| Edge { src: center, dst: registry.intern(&format!("leaf{i}")), weight: 1.0 })
            .collect();
        let (snap, _) = Snapshot::from_raw_edges(0, "0", edges, [], false).unwrap();
        DynamicGraph { registry, snapshots: vec![snap], directed: false }
    }

    fn random_series(graph: &DynamicGraph, dim: usize, seed: u64) -> EmbeddingSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrices = graph
            .snapshots
            .iter()
            .map(|snap| {
                let ids: Vec<usize> = snap.node_mask.iter().copied().collect();
                let mut rows = Array2::zeros((ids.len(), dim));
                rows.mapv_inplace(|_| rng.random::<f64>() - 0.5);
                EmbeddingMatrix::new(snap.timestamp_index, snap.timestamp_label.clone(), ids, rows)
                    .unwrap()
            })
            .collect();
        EmbeddingSeries::new(matrices).unwrap()
    }

    fn pca_config() -> ProjectionConfig {
        ProjectionConfig { method: ProjectionMethod::Pca, ..ProjectionConfig::default() }
    }

    #[test]
    fn all_v0_takes_the_whole_first_snapshot() {
        let g = star_graph(5);
        let series = random_series(&g, 4, 1);
        let cfg = AlignmentConfig {
            k: 2,
            anchor_strategy: AnchorStrategy::AllV0,
            ..AlignmentConfig::default()
        };
        let anchors = select_anchors(&g, &series, &cfg, &pca_config()).unwrap();
        assert_eq!(anchors.len(), 6);
    }

    #[test]
    fn top_degree_keeps_the_star_center() {
        let g = star_graph(5);
        let series = random_series(&g, 4, 2);
        let cfg = AlignmentConfig {
            k: 2,
            anchor_strategy: AnchorStrategy::TopDegree { cap: 3 },
            ..AlignmentConfig::default()
        };
        let anchors = select_anchors(&g, &series, &cfg, &pca_config()).unwrap();
        assert_eq!(anchors.len(), 3);
        let center = g.registry.id("center").unwrap();
        assert!(anchors.ids.contains(&center));
    }

    #[test]
    fn random_strategy_is_seed_stable() {
        let g = star_graph(9);
        let series = random_series(&g, 4, 3);
        let cfg = |seed| AlignmentConfig {
            k: 2,
            anchor_strategy: AnchorStrategy::Random { cap: 5, seed },
            ..AlignmentConfig::default()
        };
        let a = select_anchors(&g, &series, &cfg(7), &pca_config()).unwrap();
        let b = select_anchors(&g, &series, &cfg(7), &pca_config()).unwrap();
        assert_eq!(a.ids, b.ids);
        assert_eq!(a.ids.len(), 5);
    }

    #[test]
    fn too_few_candidates_for_k_is_an_error() {
        let g = star_graph(2);
        let series = random_series(&g, 4, 4);
        let cfg = AlignmentConfig {
            k: 3,
            anchor_strategy: AnchorStrategy::AllV0,
            ..AlignmentConfig::default()
        };
        assert!(select_anchors(&g, &series, &cfg, &pca_config()).is_err());
    }
}
