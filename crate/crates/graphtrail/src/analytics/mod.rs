//! Micro- and macro-level structural-change metrics over an embedding
//! series or a set of projected trajectories.
//!
//! Micro level: per-node neighborhood overlap across adjacent timestamps
//! (top-n Jaccard, rank-biased overlap). Macro level: normalized average
//! rank change, absolute embedding movement, and averaged RBO. Rankings for
//! transition metrics are taken over the common node set of the two
//! timestamps so ranks stay comparable.

pub mod metrics;
pub mod neighbors;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSeries;
use crate::error::{Error, Result};
use crate::trajectory::TrajectorySet;

pub use metrics::{
    arc, compute_report, jaccard_from_lists, jaccard_n, macro_rbo, movement, movement_lp, narc,
    rank_change_sum, rbo, rbo_from_lists, Movement, MovementRow,
};
pub use neighbors::{ranked_neighbors, RankedNeighborList};

/// Which geometry neighborhoods are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpaceKind {
    /// Cosine distance over the raw temporal embeddings.
    RawEmbedding,
    /// Euclidean distance over aligned 2D positions.
    Projected2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementVariant {
    Raw,
    UnitNormalized,
    Projected,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Depth n of the Jaccard neighbor sets.
    pub jaccard_depth: usize,
    /// Depth m the RBO prefix sum is truncated at.
    pub rbo_depth: usize,
    /// RBO damping p in (0, 1); 0.9 weights the top of the list heavily.
    pub rbo_damping: f64,
    pub space: MetricSpaceKind,
    pub movement: MovementVariant,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            jaccard_depth: 10,
            rbo_depth: 10,
            rbo_damping: 0.9,
            space: MetricSpaceKind::RawEmbedding,
            movement: MovementVariant::Raw,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.jaccard_depth == 0 || self.rbo_depth == 0 {
            return Err(Error::validation("metric depths must be >= 1"));
        }
        if !(self.rbo_damping > 0.0 && self.rbo_damping < 1.0) {
            return Err(Error::validation(format!(
                "rbo damping {} outside (0, 1)",
                self.rbo_damping
            )));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "metrics(n={},m={},p={},space={:?},movement={:?})",
            self.jaccard_depth, self.rbo_depth, self.rbo_damping, self.space, self.movement
        )
    }
}

/// The series the metrics run over: raw embeddings or aligned trajectories.
#[derive(Debug, Clone, Copy)]
pub enum MetricInput<'a> {
    Embeddings(&'a EmbeddingSeries),
    Projected(&'a TrajectorySet),
}

impl MetricInput<'_> {
    pub fn num_timestamps(&self) -> usize {
        match self {
            MetricInput::Embeddings(s) => s.len(),
            MetricInput::Projected(t) => t.num_timestamps(),
        }
    }

    pub(crate) fn space(&self) -> MetricSpaceKind {
        match self {
            MetricInput::Embeddings(_) => MetricSpaceKind::RawEmbedding,
            MetricInput::Projected(_) => MetricSpaceKind::Projected2d,
        }
    }

    pub fn label_of(&self, id: usize) -> Option<String> {
        match self {
            MetricInput::Embeddings(_) => None,
            MetricInput::Projected(t) => {
                t.nodes.iter().find(|n| n.id == id).map(|n| n.label.clone())
            }
        }
    }
}

/// One per-node-per-transition row of the report; `timestamp_index` is the
/// later timestamp of the transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub node_id: usize,
    pub label: String,
    pub timestamp_index: usize,
    pub jaccard: f64,
    pub rbo_raw: f64,
    pub rbo_normalized: f64,
    pub arc: f64,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub narc: f64,
    pub macro_rbo_raw: f64,
    pub macro_rbo_normalized: f64,
    pub movement_l1: f64,
    pub movement_l2: f64,
    pub config_fingerprint: String,
}
