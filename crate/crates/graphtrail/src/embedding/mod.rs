//! Temporal node embeddings: one dense matrix per snapshot, keyed by the
//! graph's dense node ids.

pub mod io;
pub mod knn;
pub mod model;
pub mod trainer;

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph::DynamicGraph;

pub use io::{load_embeddings, save_embeddings, EmbeddingFormat};
pub use knn::build_knn_graph;
pub use model::{loss_and_grad, LossWeights, Minibatch, ModelGradient, ModelParams};
pub use trainer::{train_series, TrainingConfig};

/// Embeddings of the nodes present at one timestamp; row i holds the vector
/// of `ids[i]`, ids ascending.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub timestamp_index: usize,
    pub timestamp_label: String,
    ids: Vec<usize>,
    row_of: HashMap<usize, usize>,
    pub rows: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn new(
        timestamp_index: usize,
        timestamp_label: impl Into<String>,
        ids: Vec<usize>,
        rows: Array2<f64>,
    ) -> Result<Self> {
        if ids.len() != rows.nrows() {
            return Err(Error::validation(format!(
                "embedding matrix has {} rows for {} node ids",
                rows.nrows(),
                ids.len()
            )));
        }
        if !ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation("embedding node ids must be strictly ascending"));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("embedding matrix contains non-finite entries"));
        }
        let row_of = ids.iter().enumerate().map(|(row, &id)| (id, row)).collect();
        Ok(EmbeddingMatrix {
            timestamp_index,
            timestamp_label: timestamp_label.into(),
            ids,
            row_of,
            rows,
        })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn row_of(&self, id: usize) -> Option<usize> {
        self.row_of.get(&id).copied()
    }

    pub fn vector(&self, id: usize) -> Option<ArrayView1<'_, f64>> {
        self.row_of(id).map(|r| self.rows.row(r))
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// The per-snapshot embedding matrices of one dynamic graph.
#[derive(Debug, Clone)]
pub struct EmbeddingSeries {
    matrices: Vec<EmbeddingMatrix>,
    dim: usize,
}

impl EmbeddingSeries {
    pub fn new(matrices: Vec<EmbeddingMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::validation("embedding series is empty"));
        }
        let dim = matrices[0].dim();
        if dim < 2 {
            return Err(Error::validation(format!("embedding dimension {dim} < 2")));
        }
        for (t, m) in matrices.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::validation(format!(
                    "dimension mismatch: snapshot {t} has d={}, expected {dim}",
                    m.dim()
                )));
            }
            if m.timestamp_index != t {
                return Err(Error::validation(format!(
                    "embedding matrix at position {t} has timestamp_index {}",
                    m.timestamp_index
                )));
            }
        }
        Ok(EmbeddingSeries { matrices, dim })
    }

    pub fn matrices(&self) -> &[EmbeddingMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, t: usize) -> Option<&EmbeddingMatrix> {
        self.matrices.get(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Ids present at both `t-1` and `t`, ascending.
    pub fn common_ids(&self, t: usize) -> Vec<usize> {
        match (self.matrix(t.wrapping_sub(1)), self.matrix(t)) {
            (Some(prev), Some(curr)) => curr
                .ids()
                .iter()
                .copied()
                .filter(|&id| prev.row_of(id).is_some())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Checks that this series matches the graph snapshot for snapshot:
    /// same length and per-timestamp node sets.
    pub fn check_alignment(&self, graph: &DynamicGraph) -> Result<()> {
        if self.matrices.len() != graph.num_timestamps() {
            return Err(Error::validation(format!(
                "series has {} matrices but graph has {} snapshots",
                self.matrices.len(),
                graph.num_timestamps()
            )));
        }
        for (t, m) in self.matrices.iter().enumerate() {
            let snap = &graph.snapshots[t];
            if m.len() != snap.num_nodes()
                || !m.ids().iter().all(|id| snap.node_mask.contains(id))
            {
                return Err(Error::validation(format!(
                    "embedding rows at t={t} do not cover the snapshot's node mask"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn matrix_rejects_unsorted_ids() {
        let rows = arr2(&[[0.0, 1.0], [1.0, 0.0]]);
        assert!(EmbeddingMatrix::new(0, "0", vec![2, 1], rows).is_err());
    }

    #[test]
    fn matrix_lookup_by_id() {
        let rows = arr2(&[[0.0, 1.0], [1.0, 0.0]]);
        let m = EmbeddingMatrix::new(0, "0", vec![3, 7], rows).unwrap();
        assert_eq!(m.row_of(7), Some(1));
        assert_eq!(m.vector(3).unwrap()[1], 1.0);
        assert!(m.vector(4).is_none());
    }

    #[test]
    fn series_rejects_dimension_mismatch() {
        let a = EmbeddingMatrix::new(0, "0", vec![0], arr2(&[[0.0, 1.0]])).unwrap();
        let b = EmbeddingMatrix::new(1, "1", vec![0], arr2(&[[0.0, 1.0, 2.0]])).unwrap();
        let err = EmbeddingSeries::new(vec![a, b]).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"));
    }

    #[test]
    fn common_ids_intersects_adjacent_masks() {
        let a = EmbeddingMatrix::new(0, "0", vec![0, 1], arr2(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        let b = EmbeddingMatrix::new(1, "1", vec![1, 2], arr2(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        let s = EmbeddingSeries::new(vec![a, b]).unwrap();
        assert_eq!(s.common_ids(1), vec![1]);
        assert!(s.common_ids(0).is_empty());
    }
}
