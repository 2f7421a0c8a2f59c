//! Point tables and deterministic distance rankings.

use std::collections::HashMap;

use crate::analytics::{MetricInput, MetricSpaceKind};
use crate::error::{Error, Result};

/// The closest nodes of one owner at one timestamp, ascending distance,
/// ties by ascending id, owner excluded.
#[derive(Debug, Clone)]
pub struct RankedNeighborList {
    pub owner: usize,
    pub timestamp_index: usize,
    pub neighbors: Vec<usize>,
}

/// All vectors present at one timestamp with the distance they are compared
/// under.
pub(crate) struct PointSet {
    ids: Vec<usize>,
    vectors: HashMap<usize, Vec<f64>>,
    norms: HashMap<usize, f64>,
    metric: MetricSpaceKind,
}

impl PointSet {
    pub(crate) fn at(input: &MetricInput<'_>, t: usize) -> Result<PointSet> {
        let metric = input.space();
        let mut ids = Vec::new();
        let mut vectors = HashMap::new();
        match input {
            MetricInput::Embeddings(series) => {
                let m = series.matrix(t).ok_or_else(|| {
                    Error::validation(format!("timestamp {t} outside the series"))
                })?;
                for &id in m.ids() {
                    ids.push(id);
                    vectors.insert(id, m.vector(id).expect("id present").to_vec());
                }
            }
            MetricInput::Projected(set) => {
                if t >= set.num_timestamps() {
                    return Err(Error::validation(format!(
                        "timestamp {t} outside the trajectory set"
                    )));
                }
                for track in &set.nodes {
                    if let Some(&(_, x, y)) =
                        track.points.iter().find(|&&(pt, _, _)| pt == t)
                    {
                        ids.push(track.id);
                        vectors.insert(track.id, vec![x, y]);
                    }
                }
                ids.sort_unstable();
            }
        }
        let norms = vectors
            .iter()
            .map(|(&id, v)| (id, v.iter().map(|x| x * x).sum::<f64>().sqrt()))
            .collect();
        Ok(PointSet { ids, vectors, norms, metric })
    }

    pub(crate) fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub(crate) fn contains(&self, id: usize) -> bool {
        self.vectors.contains_key(&id)
    }

    pub(crate) fn vector(&self, id: usize) -> Option<&[f64]> {
        self.vectors.get(&id).map(Vec::as_slice)
    }

    /// Distance between two present nodes: cosine distance (1 - similarity,
    /// zero-norm vectors pinned to similarity 0) or Euclidean.
    pub(crate) fn distance(&self, a: usize, b: usize) -> f64 {
        let va = &self.vectors[&a];
        let vb = &self.vectors[&b];
        match self.metric {
            MetricSpaceKind::RawEmbedding => {
                let na = self.norms[&a];
                let nb = self.norms[&b];
                if na == 0.0 || nb == 0.0 {
                    return 1.0;
                }
                let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                1.0 - (dot / (na * nb)).clamp(-1.0, 1.0)
            }
            MetricSpaceKind::Projected2d => {
                let dx = va[0] - vb[0];
                let dy = va[1] - vb[1];
                (dx * dx + dy * dy).sqrt()
            }
        }
    }

    /// Candidates sorted by (distance from `owner`, id).
    pub(crate) fn ranking(&self, owner: usize, candidates: &[usize]) -> Vec<usize> {
        let mut with_dist: Vec<(f64, usize)> = candidates
            .iter()
            .filter(|&&id| id != owner)
            .map(|&id| (self.distance(owner, id), id))
            .collect();
        with_dist.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distance").then(a.1.cmp(&b.1)));
        with_dist.into_iter().map(|(_, id)| id).collect()
    }
}

/// Top-`depth` nodes closest to `i` at time `t` over everything present
/// there.
pub fn ranked_neighbors(
    input: &MetricInput<'_>,
    i: usize,
    t: usize,
    depth: usize,
) -> Result<RankedNeighborList> {
    let points = PointSet::at(input, t)?;
    if !points.contains(i) {
        return Err(Error::validation(format!("node {i} absent at t={t}")));
    }
    if depth > points.ids().len().saturating_sub(1) {
        return Err(Error::validation(format!(
            "depth {depth} exceeds {} available neighbors at t={t}",
            points.ids().len().saturating_sub(1)
        )));
    }
    let mut neighbors = points.ranking(i, points.ids());
    neighbors.truncate(depth);
    Ok(RankedNeighborList { owner: i, timestamp_index: t, neighbors })
}

/// Rankings of the common node set (minus `i`) at t-1 and t: the inputs to
/// every transition metric.
pub(crate) fn transition_rankings(
    input: &MetricInput<'_>,
    i: usize,
    t: usize,
) -> Result<(Vec<usize>, Vec<usize>, usize)> {
    if t == 0 {
        return Err(Error::validation("transition metrics need t >= 1"));
    }
    let prev = PointSet::at(input, t - 1)?;
    let curr = PointSet::at(input, t)?;
    if !prev.contains(i) || !curr.contains(i) {
        return Err(Error::validation(format!(
            "node {i} absent at t={} or t={t}",
            t - 1
        )));
    }
    let common: Vec<usize> = curr
        .ids()
        .iter()
        .copied()
        .filter(|&id| prev.contains(id))
        .collect();
    let ranked_prev = prev.ranking(i, &common);
    let ranked_curr = curr.ranking(i, &common);
    Ok((ranked_prev, ranked_curr, common.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{EmbeddingMatrix, EmbeddingSeries};
    use ndarray::arr2;

    fn series_one() -> EmbeddingSeries {
        // cosine similarities from node 0: to 1 high, to 2 low
        let rows = arr2(&[[1.0, 0.0], [0.95, 0.3], [-0.2, 1.0]]);
        let m = EmbeddingMatrix::new(0, "0", vec![0, 1, 2], rows).unwrap();
        EmbeddingSeries::new(vec![m]).unwrap()
    }

    #[test]
    fn nearest_neighbors_sorted_by_similarity() {
        let s = series_one();
        let input = MetricInput::Embeddings(&s);
        let list = ranked_neighbors(&input, 0, 0, 2).unwrap();
        assert_eq!(list.neighbors, vec![1, 2]);
    }

    #[test]
    fn full_depth_is_a_permutation() {
        let s = series_one();
        let input = MetricInput::Embeddings(&s);
        let list = ranked_neighbors(&input, 1, 0, 2).unwrap();
        let mut sorted = list.neighbors.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 2]);
    }

    #[test]
    fn exact_ties_prefer_lower_id() {
        let rows = arr2(&[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]);
        let m = EmbeddingMatrix::new(0, "0", vec![0, 1, 2], rows).unwrap();
        let s = EmbeddingSeries::new(vec![m]).unwrap();
        let input = MetricInput::Embeddings(&s);
        let list = ranked_neighbors(&input, 0, 0, 1).unwrap();
        assert_eq!(list.neighbors, vec![1]);
    }

    #[test]
    fn absent_node_and_excess_depth_error() {
        let s = series_one();
        let input = MetricInput::Embeddings(&s);
        assert!(ranked_neighbors(&input, 9, 0, 1).is_err());
        assert!(ranked_neighbors(&input, 0, 0, 3).is_err());
    }
}
