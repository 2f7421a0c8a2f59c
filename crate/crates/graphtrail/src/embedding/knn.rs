//! k-nearest-neighbor graph construction over one embedding matrix, the
//! standard recipe for turning co-trained vectors (e.g. diachronic word
//! embeddings) into a similarity graph.

use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{Edge, Snapshot};
use crate::trajectory::{cosine_similarities, knn_anchors};

/// Connects every node to its k highest-cosine-similarity neighbors.
///
/// The result is a directed snapshot with out-degree exactly k, edge weight
/// the similarity; ties break toward the lower id, self excluded.
pub fn build_knn_graph(matrix: &EmbeddingMatrix, k: usize) -> Result<Snapshot> {
    let n = matrix.len();
    if k == 0 || k >= n {
        return Err(Error::validation(format!(
            "k={k} out of range for {n} nodes (need 1 <= k < n)"
        )));
    }
    let edges: Vec<Edge> = (0..n)
        .into_par_iter()
        .map(|row| -> Result<Vec<Edge>> {
            let sims = cosine_similarities(matrix.rows.row(row), matrix.rows.view());
            let neighbors = knn_anchors(&sims.values, k, Some(row))?;
            let src = matrix.ids()[row];
            Ok(neighbors
                .into_iter()
                .map(|nb| Edge { src, dst: matrix.ids()[nb], weight: sims.values[nb] })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let (snapshot, _) = Snapshot::from_raw_edges(
        matrix.timestamp_index,
        matrix.timestamp_label.clone(),
        edges,
        matrix.ids().iter().copied(),
        true,
    )?;
    Ok(snapshot)
}
