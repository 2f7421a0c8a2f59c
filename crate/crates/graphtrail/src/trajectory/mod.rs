//! Cross-time alignment: place every node at every timestamp into the fixed
//! 2D frame spanned by anchor nodes from the first snapshot.
//!
//! Anchors are projected once; afterwards each node's position at time t is
//! an aggregate of its k most cosine-similar anchors' static positions,
//! with anchors themselves optionally interpolated back toward their own
//! static spot. New nodes need no history: one snapshot's similarities are
//! enough to place them.

pub mod align;
pub mod anchors;
pub mod procrustes;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use align::{
    aggregate, compute_trajectories, cosine_similarities, interpolate, knn_anchors, Similarities,
};
pub use anchors::select_anchors;
pub use procrustes::procrustes_align;

/// How anchor ids are drawn from the first snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorStrategy {
    /// `all_v0` up to 5000 nodes, then `top_degree` capped there.
    Auto,
    AllV0,
    TopDegree { cap: usize },
    Random { cap: usize, seed: u64 },
}

/// How the k neighbor positions collapse into one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    /// Convex weights proportional to `exp(similarity / tau)`.
    SimilaritySoftmax { tau: f64 },
}

impl Aggregation {
    pub fn describe(&self) -> String {
        match self {
            Aggregation::Mean => "mean".to_string(),
            Aggregation::SimilaritySoftmax { tau } => format!("similarity_softmax(tau={tau})"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignmentConfig {
    pub k: usize,
    /// Interpolation factor for anchors: 1 pins them to their static spot.
    pub alpha: f64,
    pub aggregation: Aggregation,
    pub anchor_strategy: AnchorStrategy,
    /// Timestamp the anchor reference embeddings are taken from.
    pub reference_t: usize,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            k: 10,
            alpha: 0.3,
            aggregation: Aggregation::SimilaritySoftmax { tau: 0.1 },
            anchor_strategy: AnchorStrategy::Auto,
            reference_t: 0,
        }
    }
}

impl AlignmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::validation("k must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::validation(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if let Aggregation::SimilaritySoftmax { tau } = self.aggregation {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::validation(format!("tau {tau} must be positive")));
            }
        }
        Ok(())
    }
}

/// Anchor node ids with their reference embeddings X and static projection Z.
#[derive(Debug, Clone)]
pub struct AnchorSet {
    /// Ascending registry ids, all present in snapshot 0 and at `reference_t`.
    pub ids: Vec<usize>,
    pub reference_t: usize,
    /// |V'| x d reference embedding matrix.
    pub reference_embeddings: Array2<f64>,
    /// |V'| x 2 static positions.
    pub positions: Array2<f64>,
    /// Projection fingerprint recorded into trajectory provenance.
    pub projection_method: String,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub method: String,
    pub k: usize,
    pub alpha: f64,
    pub aggregation: String,
    pub anchor_count: usize,
    pub reference_t: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// One node's path: `(timestamp_index, x, y)` triples, gaps where the node
/// is absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeTrack {
    #[serde(skip)]
    pub id: usize,
    pub label: String,
    pub points: Vec<(usize, f64, f64)>,
}

/// Per-node 2D positions over time plus the provenance that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySet {
    pub meta: TrajectoryMeta,
    pub anchors: Vec<AnchorPoint>,
    pub nodes: Vec<NodeTrack>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl TrajectorySet {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut set: TrajectorySet = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("invalid trajectory JSON: {e}")))?;
        // Tracks are serialized in ascending-id order; re-indexing preserves
        // the relative order ties are broken by.
        for (i, track) in set.nodes.iter_mut().enumerate() {
            track.id = i;
        }
        Ok(set)
    }

    pub fn position(&self, label: &str, t: usize) -> Option<(f64, f64)> {
        self.nodes
            .iter()
            .find(|n| n.label == label)?
            .points
            .iter()
            .find(|&&(pt, _, _)| pt == t)
            .map(|&(_, x, y)| (x, y))
    }

    pub fn total_points(&self) -> usize {
        self.nodes.iter().map(|n| n.points.len()).sum()
    }

    pub fn num_timestamps(&self) -> usize {
        self.nodes
            .iter()
            .flat_map(|n| n.points.iter().map(|&(t, _, _)| t + 1))
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_json_round_trips_positions_bit_exact() {
        let set = TrajectorySet {
            meta: TrajectoryMeta {
                method: "pca".into(),
                k: 3,
                alpha: 0.3,
                aggregation: "mean".into(),
                anchor_count: 2,
                reference_t: 0,
            },
            anchors: vec![AnchorPoint { label: "a".into(), x: 0.1, y: -0.9 }],
            nodes: vec![NodeTrack {
                id: 0,
                label: "a".into(),
                points: vec![(0, 0.30000000000000004, 1e-300), (2, -5.5, 2.25)],
            }],
            warnings: vec![],
        };
        let json = set.to_json();
        let back = TrajectorySet::from_json(&json).unwrap();
        assert_eq!(back.nodes[0].points.len(), 2);
        for (a, b) in set.nodes[0].points.iter().zip(&back.nodes[0].points) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1.to_bits(), b.1.to_bits());
            assert_eq!(a.2.to_bits(), b.2.to_bits());
        }
        assert_eq!(back.to_json(), json);
    }
}
