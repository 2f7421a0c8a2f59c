//! Discrete-time dynamic graphs: a global node registry plus an ordered
//! sequence of snapshots.
//!
//! Node identity is the external string label; dense ids are internal and
//! stable across all snapshots of one graph. Undirected graphs store each
//! edge once with `src < dst`.

pub mod events;
pub mod parse;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bijective map between external node labels and dense ids in `[0, n)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct NodeRegistry {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `label`, registering it if unseen.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl TryFrom<Vec<String>> for NodeRegistry {
    type Error = String;

    fn try_from(labels: Vec<String>) -> std::result::Result<Self, String> {
        let mut reg = NodeRegistry::new();
        for label in &labels {
            if reg.index.contains_key(label) {
                return Err(format!("duplicate node label {label:?} in registry"));
            }
            reg.intern(label);
        }
        Ok(reg)
    }
}

impl From<NodeRegistry> for Vec<String> {
    fn from(reg: NodeRegistry) -> Vec<String> {
        reg.labels
    }
}

/// A weighted directed edge between dense node ids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// One graph snapshot: the nodes and edges present at a timestamp.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub timestamp_index: usize,
    /// Opaque sortable string, e.g. `"1998"` or `"2020-03"`.
    pub timestamp_label: String,
    /// Sorted by `(src, dst)`; at most one entry per ordered pair.
    pub edges: Vec<Edge>,
    pub node_mask: BTreeSet<usize>,
}

impl Snapshot {
    /// Normalizes raw edges into a snapshot: drops (and counts) self-loops,
    /// canonicalizes undirected pairs to `src < dst`, sums duplicate rows,
    /// and rejects non-finite weights.
    pub fn from_raw_edges(
        timestamp_index: usize,
        timestamp_label: impl Into<String>,
        raw: Vec<Edge>,
        extra_nodes: impl IntoIterator<Item = usize>,
        directed: bool,
    ) -> Result<(Self, u64)> {
        let mut self_loops = 0u64;
        let mut agg: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut node_mask: BTreeSet<usize> = extra_nodes.into_iter().collect();
        for e in raw {
            if !e.weight.is_finite() {
                return Err(Error::validation(format!(
                    "non-finite edge weight on ({}, {})",
                    e.src, e.dst
                )));
            }
            if e.src == e.dst {
                self_loops += 1;
                continue;
            }
            let (src, dst) = if directed || e.src < e.dst {
                (e.src, e.dst)
            } else {
                (e.dst, e.src)
            };
            *agg.entry((src, dst)).or_insert(0.0) += e.weight;
            node_mask.insert(src);
            node_mask.insert(dst);
        }
        let edges = agg
            .into_iter()
            .map(|((src, dst), weight)| Edge { src, dst, weight })
            .collect();
        Ok((
            Snapshot {
                timestamp_index,
                timestamp_label: timestamp_label.into(),
                edges,
                node_mask,
            },
            self_loops,
        ))
    }

    pub fn num_nodes(&self) -> usize {
        self.node_mask.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.node_mask.contains(&id)
    }
}

/// An ordered sequence of snapshots over a shared node registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicGraph {
    pub registry: NodeRegistry,
    pub snapshots: Vec<Snapshot>,
    pub directed: bool,
}

impl DynamicGraph {
    pub fn num_timestamps(&self) -> usize {
        self.snapshots.len()
    }

    pub fn snapshot(&self, t: usize) -> Option<&Snapshot> {
        self.snapshots.get(t)
    }

    /// Unweighted degree of `id` summed over all snapshots.
    pub fn total_degree(&self, id: usize) -> usize {
        self.snapshots
            .iter()
            .flat_map(|s| s.edges.iter())
            .filter(|e| e.src == id || e.dst == id)
            .count()
    }

    /// Strict invariant check; the underlying rules are the same ones
    /// [`DynamicGraph::validate`] reports as breaches.
    pub fn check_invariants(&self) -> Result<()> {
        let report = self.validate();
        if let Some(first) = report.breaches.first() {
            return Err(Error::validation(first.clone()));
        }
        Ok(())
    }

    /// Report-only diagnostics: per-snapshot counts, birth/death timeline,
    /// isolated nodes, plus any invariant breaches.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            node_count: self.registry.len(),
            directed: self.directed,
            ..ValidationReport::default()
        };
        if self.snapshots.is_empty() {
            report.breaches.push("no snapshots".to_string());
            return report;
        }
        let mut births: BTreeMap<usize, usize> = BTreeMap::new();
        let mut deaths: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, snap) in self.snapshots.iter().enumerate() {
            if snap.timestamp_index != i {
                report.breaches.push(format!(
                    "snapshot at position {i} has timestamp_index {}",
                    snap.timestamp_index
                ));
            }
            let mut incident: BTreeSet<usize> = BTreeSet::new();
            let mut seen_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
            for e in &snap.edges {
                if e.src == e.dst {
                    report
                        .breaches
                        .push(format!("t={i}: self-loop on node {}", e.src));
                }
                if !self.directed && e.src > e.dst {
                    report.breaches.push(format!(
                        "t={i}: undirected edge ({}, {}) not canonically ordered",
                        e.src, e.dst
                    ));
                }
                if !e.weight.is_finite() {
                    report.breaches.push(format!(
                        "t={i}: non-finite weight on edge ({}, {})",
                        e.src, e.dst
                    ));
                }
                if !seen_pairs.insert((e.src, e.dst)) {
                    report.breaches.push(format!(
                        "t={i}: duplicate edge ({}, {})",
                        e.src, e.dst
                    ));
                }
                for endpoint in [e.src, e.dst] {
                    if !snap.node_mask.contains(&endpoint) {
                        report.breaches.push(format!(
                            "t={i}: edge endpoint {endpoint} not in node mask"
                        ));
                    }
                    incident.insert(endpoint);
                }
            }
            for &id in &snap.node_mask {
                if id >= self.registry.len() {
                    report
                        .breaches
                        .push(format!("t={i}: node id {id} not in registry"));
                }
                births.entry(id).or_insert(i);
                deaths.insert(id, i);
            }
            let isolated = snap.node_mask.iter().filter(|id| !incident.contains(id)).count();
            if snap.node_mask.is_empty() {
                report.warnings.push(format!("t={i}: empty snapshot"));
            }
            report.snapshot_stats.push(SnapshotStats {
                timestamp_index: i,
                timestamp_label: snap.timestamp_label.clone(),
                nodes: snap.num_nodes(),
                edges: snap.num_edges(),
                isolated_nodes: isolated,
            });
        }
        for (id, t) in births {
            if let Some(label) = self.registry.label(id) {
                report.births.insert(label.to_string(), t);
            }
        }
        for (id, t) in deaths {
            if let Some(label) = self.registry.label(id) {
                report.deaths.insert(label.to_string(), t);
            }
        }
        report
    }
}

/// Per-snapshot counts plus the isolated-node tally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub timestamp_index: usize,
    pub timestamp_label: String,
    pub nodes: usize,
    pub edges: usize,
    pub isolated_nodes: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub node_count: usize,
    pub directed: bool,
    pub snapshot_stats: Vec<SnapshotStats>,
    /// label -> first timestamp_index the node appears at
    pub births: BTreeMap<String, usize>,
    /// label -> last timestamp_index the node appears at
    pub deaths: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
    pub breaches: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.breaches.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} nodes, {} snapshots ({})",
            self.node_count,
            self.snapshot_stats.len(),
            if self.directed { "directed" } else { "undirected" }
        )?;
        for s in &self.snapshot_stats {
            writeln!(
                f,
                "  t={} [{}]: {} nodes, {} edges, {} isolated",
                s.timestamp_index, s.timestamp_label, s.nodes, s.edges, s.isolated_nodes
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        for b in &self.breaches {
            writeln!(f, "  BREACH: {b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_bijective_and_stable() {
        let mut reg = NodeRegistry::new();
        let a = reg.intern("a");
        let b = reg.intern("b");
        assert_eq!(reg.intern("a"), a);
        assert_ne!(a, b);
        assert_eq!(reg.label(a), Some("a"));
        assert_eq!(reg.id("b"), Some(b));
    }

    #[test]
    fn registry_round_trips_through_json() {
        let mut reg = NodeRegistry::new();
        reg.intern("x");
        reg.intern("y");
        let json = serde_json::to_string(&reg).unwrap();
        let back: NodeRegistry = serde_json::from_str(&json).unwrap();
        assert_eq!(back.id("y"), Some(1));
    }

    #[test]
    fn registry_rejects_duplicate_labels_on_load() {
        let err = serde_json::from_str::<NodeRegistry>(r#"["a","a"]"#);
        assert!(err.is_err());
    }

    #[test]
    fn snapshot_sums_duplicates_and_drops_self_loops() {
        let raw = vec![
            Edge { src: 0, dst: 1, weight: 1.0 },
            Edge { src: 0, dst: 1, weight: 2.0 },
            Edge { src: 2, dst: 2, weight: 1.0 },
        ];
        let (snap, loops) = Snapshot::from_raw_edges(0, "0", raw, [], true).unwrap();
        assert_eq!(loops, 1);
        assert_eq!(snap.edges.len(), 1);
        assert_eq!(snap.edges[0].weight, 3.0);
        // self-loop endpoint does not enter the mask through its edge
        assert!(!snap.contains(2));
    }

    #[test]
    fn undirected_edges_canonicalize_and_merge() {
        let raw = vec![
            Edge { src: 1, dst: 0, weight: 1.0 },
            Edge { src: 0, dst: 1, weight: 1.5 },
        ];
        let (snap, _) = Snapshot::from_raw_edges(0, "0", raw, [], false).unwrap();
        assert_eq!(snap.edges.len(), 1);
        assert_eq!((snap.edges[0].src, snap.edges[0].dst), (0, 1));
        assert_eq!(snap.edges[0].weight, 2.5);
    }

    #[test]
    fn validate_flags_unregistered_node() {
        let mut reg = NodeRegistry::new();
        reg.intern("a");
        let (snap, _) = Snapshot::from_raw_edges(
            0,
            "0",
            vec![Edge { src: 0, dst: 7, weight: 1.0 }],
            [],
            true,
        )
        .unwrap();
        let g = DynamicGraph { registry: reg, snapshots: vec![snap], directed: true };
        let report = g.validate();
        assert!(!report.ok());
        assert!(report.breaches.iter().any(|b| b.contains("not in registry")));
    }

    #[test]
    fn validate_warns_on_empty_snapshot() {
        let g = DynamicGraph {
            registry: NodeRegistry::new(),
            snapshots: vec![Snapshot {
                timestamp_index: 0,
                timestamp_label: "0".into(),
                edges: vec![],
                node_mask: BTreeSet::new(),
            }],
            directed: false,
        };
        let report = g.validate();
        assert!(report.ok());
        assert_eq!(report.snapshot_stats[0].edges, 0);
        assert!(report.warnings.iter().any(|w| w.contains("empty snapshot")));
    }
}
