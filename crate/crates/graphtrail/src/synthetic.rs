//! Deterministic synthetic graphs for examples, tests, and the bundled
//! dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{DynamicGraph, Edge, NodeRegistry, Snapshot};

/// Two complete graphs of `clique_size` nodes joined by a single bridge
/// edge, as one undirected snapshot. Nodes `a0..` form the first clique,
/// `b0..` the second.
pub fn two_cliques(clique_size: usize) -> DynamicGraph {
    let mut registry = NodeRegistry::new();
    let a: Vec<usize> = (0..clique_size).map(|i| registry.intern(&format!("a{i}"))).collect();
    let b: Vec<usize> = (0..clique_size).map(|i| registry.intern(&format!("b{i}"))).collect();
    let mut edges = Vec::new();
    for group in [&a, &b] {
        for i in 0..clique_size {
            for j in (i + 1)..clique_size {
                edges.push(Edge { src: group[i], dst: group[j], weight: 1.0 });
            }
        }
    }
    edges.push(Edge { src: a[0], dst: b[0], weight: 1.0 });
    let (snap, _) = Snapshot::from_raw_edges(0, "0", edges, [], false)
        .expect("synthetic edges are valid");
    DynamicGraph { registry, snapshots: vec![snap], directed: false }
}

/// A two-cluster dynamic graph with slow drift and node churn.
///
/// Nodes `n000..` split into two clusters wired with a deterministic ring
/// plus seeded random intra-cluster edges and a few cross edges that grow
/// over time. The last node is born at t=2 (when `timestamps > 2`) so
/// mid-series arrivals are always exercised.
pub fn drifting_clusters(n_nodes: usize, timestamps: usize, seed: u64) -> DynamicGraph {
    assert!(n_nodes >= 4, "need at least 4 nodes");
    assert!(timestamps >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut registry = NodeRegistry::new();
    let ids: Vec<usize> = (0..n_nodes).map(|i| registry.intern(&format!("n{i:03}"))).collect();
    let half = n_nodes / 2;
    let late_birth = if timestamps > 2 { Some(ids[n_nodes - 1]) } else { None };

    let mut snapshots = Vec::with_capacity(timestamps);
    for t in 0..timestamps {
        let present: Vec<usize> = ids
            .iter()
            .copied()
            .filter(|&id| match late_birth {
                Some(late) if id == late => t >= 2,
                _ => true,
            })
            .collect();
        let in_cluster = |id: usize| -> usize { usize::from(id >= half) };
        let mut edges = Vec::new();
        // ring inside each cluster keeps walks alive
        for cluster in 0..2 {
            let members: Vec<usize> =
                present.iter().copied().filter(|&id| in_cluster(id) == cluster).collect();
            for w in members.windows(2) {
                edges.push(Edge { src: w[0], dst: w[1], weight: 1.0 + rng.random::<f64>() });
            }
            if members.len() > 2 {
                edges.push(Edge {
                    src: members[0],
                    dst: members[members.len() - 1],
                    weight: 1.0 + rng.random::<f64>(),
                });
            }
        }
        // random extras, mostly intra-cluster
        for i in 0..present.len() {
            for j in (i + 1)..present.len() {
                let (a, b) = (present[i], present[j]);
                let same = in_cluster(a) == in_cluster(b);
                let p = if same { 0.25 } else { 0.02 + 0.02 * t as f64 };
                if rng.random::<f64>() < p {
                    edges.push(Edge { src: a, dst: b, weight: 0.5 + 1.5 * rng.random::<f64>() });
                }
            }
        }
        let (snap, _) = Snapshot::from_raw_edges(
            t,
            format!("{t:04}"),
            edges,
            present.iter().copied(),
            false,
        )
        .expect("synthetic edges are valid");
        snapshots.push(snap);
    }

    DynamicGraph { registry, snapshots, directed: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cliques_edge_count() {
        let g = two_cliques(4);
        // 2 * C(4,2) + bridge
        assert_eq!(g.snapshots[0].num_edges(), 13);
        assert_eq!(g.registry.len(), 8);
    }

    #[test]
    fn drifting_clusters_is_deterministic_and_has_late_birth() {
        let a = drifting_clusters(30, 5, 42);
        let b = drifting_clusters(30, 5, 42);
        assert_eq!(
            crate::graph::parse::graph_to_json(&a),
            crate::graph::parse::graph_to_json(&b)
        );
        let late = a.registry.id("n029").unwrap();
        assert!(!a.snapshots[0].contains(late));
        assert!(!a.snapshots[1].contains(late));
        assert!(a.snapshots[2].contains(late));
        a.check_invariants().unwrap();
    }
}
