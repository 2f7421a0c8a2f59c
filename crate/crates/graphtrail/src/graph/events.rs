//! Continuous-time event logs and their conversion to snapshot sequences.
//!
//! A log is a list of timestamped add/delete events for nodes and edges.
//! `discretize_events` buckets the timeline into regular intervals and emits
//! one snapshot per interval, containing everything alive at any instant of
//! that interval. Deletions take effect in the following interval.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::parse::IngestOutcome;
use crate::graph::{DynamicGraph, Edge, NodeRegistry, Snapshot};

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    AddNode { node: String },
    DelNode { node: String },
    AddEdge { src: String, dst: String, weight: f64 },
    DelEdge { src: String, dst: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEvent {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default)]
pub struct EventLog {
    pub events: Vec<GraphEvent>,
}

/// Wire form of one JSONL event record: `{time, kind, src, dst?, weight?}`.
/// Node events put the node label in `src`.
#[derive(Debug, Serialize, Deserialize)]
struct RawEvent {
    time: f64,
    kind: String,
    src: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    dst: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

impl EventLog {
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let raw: RawEvent = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
                path: "<event log>".into(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
            if !raw.time.is_finite() {
                return Err(Error::validation(format!(
                    "event at line {} has non-finite time",
                    lineno + 1
                )));
            }
            let need_dst = || {
                raw.dst.clone().ok_or_else(|| {
                    Error::validation(format!("edge event at line {} missing dst", lineno + 1))
                })
            };
            let kind = match raw.kind.as_str() {
                "add_node" => EventKind::AddNode { node: raw.src },
                "del_node" => EventKind::DelNode { node: raw.src },
                "add_edge" => EventKind::AddEdge {
                    src: raw.src,
                    dst: need_dst()?,
                    weight: raw.weight.unwrap_or(1.0),
                },
                "del_edge" => EventKind::DelEdge { src: raw.src, dst: need_dst()? },
                other => {
                    return Err(Error::validation(format!(
                        "unknown event kind {other:?} at line {}",
                        lineno + 1
                    )))
                }
            };
            events.push(GraphEvent { time: raw.time, kind });
        }
        Ok(EventLog { events })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text)
    }
}

/// Lifetime of one entity: `[start, end]`, inclusive of the deletion instant.
#[derive(Debug, Clone, Copy)]
struct Episode {
    start: f64,
    end: f64,
    weight: f64,
}

impl Episode {
    fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.start < hi && self.end >= lo
    }
}

const MAX_SNAPSHOTS: i64 = 1_000_000;

/// Converts an event log into a snapshot sequence with `interval`-wide
/// buckets. Snapshot k holds everything alive at any instant of
/// `[k·interval, (k+1)·interval)`; leading empty buckets before the first
/// event are trimmed.
pub fn discretize_events(log: &EventLog, interval: f64, directed: bool) -> Result<IngestOutcome> {
    if log.events.is_empty() {
        return Err(Error::validation("empty event log"));
    }
    if !(interval.is_finite() && interval > 0.0) {
        return Err(Error::validation(format!("non-positive interval {interval}")));
    }

    let mut order: Vec<usize> = (0..log.events.len()).collect();
    order.sort_by(|&a, &b| {
        log.events[a]
            .time
            .partial_cmp(&log.events[b].time)
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut registry = NodeRegistry::new();
    let mut node_episodes: BTreeMap<usize, Vec<Episode>> = BTreeMap::new();
    let mut edge_episodes: BTreeMap<(usize, usize), Vec<Episode>> = BTreeMap::new();
    let mut self_loops_dropped = 0u64;

    let node_alive = |eps: &BTreeMap<usize, Vec<Episode>>, id: usize| {
        eps.get(&id).and_then(|v| v.last()).map(|e| e.end.is_infinite()).unwrap_or(false)
    };
    let ensure_node_alive =
        |eps: &mut BTreeMap<usize, Vec<Episode>>, id: usize, time: f64| {
            let open = eps.get(&id).and_then(|v| v.last()).map(|e| e.end.is_infinite());
            if open != Some(true) {
                eps.entry(id).or_default().push(Episode {
                    start: time,
                    end: f64::INFINITY,
                    weight: 0.0,
                });
            }
        };

    for &idx in &order {
        let ev = &log.events[idx];
        let t = ev.time;
        match &ev.kind {
            EventKind::AddNode { node } => {
                let id = registry.intern(node);
                if node_alive(&node_episodes, id) {
                    return Err(Error::validation(format!(
                        "node {node:?} re-added at t={t} while still present"
                    )));
                }
                ensure_node_alive(&mut node_episodes, id, t);
            }
            EventKind::DelNode { node } => {
                let id = registry.id(node).ok_or_else(|| {
                    Error::validation(format!("del_node {node:?} at t={t} before any add"))
                })?;
                if !node_alive(&node_episodes, id) {
                    return Err(Error::validation(format!(
                        "del_node {node:?} at t={t} but node is not present"
                    )));
                }
                node_episodes.get_mut(&id).unwrap().last_mut().unwrap().end = t;
                // A node takes its live edges with it.
                for (&(s, d), eps) in edge_episodes.iter_mut() {
                    if s == id || d == id {
                        if let Some(last) = eps.last_mut() {
                            if last.end.is_infinite() {
                                last.end = t;
                            }
                        }
                    }
                }
            }
            EventKind::AddEdge { src, dst, weight } => {
                if !weight.is_finite() {
                    return Err(Error::validation(format!(
                        "non-finite weight on add_edge at t={t}"
                    )));
                }
                if src == dst {
                    self_loops_dropped += 1;
                    continue;
                }
                let a = registry.intern(src);
                let b = registry.intern(dst);
                let key = if directed || a < b { (a, b) } else { (b, a) };
                let open = edge_episodes
                    .get(&key)
                    .and_then(|v| v.last())
                    .map(|e| e.end.is_infinite())
                    .unwrap_or(false);
                if open {
                    return Err(Error::validation(format!(
                        "edge ({src:?}, {dst:?}) re-added at t={t} while still present"
                    )));
                }
                ensure_node_alive(&mut node_episodes, a, t);
                ensure_node_alive(&mut node_episodes, b, t);
                edge_episodes.entry(key).or_default().push(Episode {
                    start: t,
                    end: f64::INFINITY,
                    weight: *weight,
                });
            }
            EventKind::DelEdge { src, dst } => {
                let a = registry.id(src);
                let b = registry.id(dst);
                let key = match (a, b) {
                    (Some(a), Some(b)) => {
                        if directed || a < b {
                            (a, b)
                        } else {
                            (b, a)
                        }
                    }
                    _ => {
                        return Err(Error::validation(format!(
                            "del_edge ({src:?}, {dst:?}) at t={t} before any add"
                        )))
                    }
                };
                let open = edge_episodes
                    .get_mut(&key)
                    .and_then(|v| v.last_mut())
                    .filter(|e| e.end.is_infinite());
                match open {
                    Some(ep) => ep.end = t,
                    None => {
                        return Err(Error::validation(format!(
                            "del_edge ({src:?}, {dst:?}) at t={t} but edge is not present"
                        )))
                    }
                }
            }
        }
    }

    let t_min = log.events.iter().map(|e| e.time).fold(f64::INFINITY, f64::min);
    let t_max = log.events.iter().map(|e| e.time).fold(f64::NEG_INFINITY, f64::max);
    let k0 = (t_min / interval).floor() as i64;
    let k_max = (t_max / interval).floor() as i64;
    let buckets = k_max - k0 + 1;
    if buckets > MAX_SNAPSHOTS {
        return Err(Error::validation(format!(
            "interval {interval} would produce {buckets} snapshots"
        )));
    }

    let mut snapshots = Vec::with_capacity(buckets as usize);
    for i in 0..buckets {
        let lo = (k0 + i) as f64 * interval;
        let hi = (k0 + i + 1) as f64 * interval;
        let mut nodes: Vec<usize> = Vec::new();
        for (&id, eps) in &node_episodes {
            if eps.iter().any(|e| e.overlaps(lo, hi)) {
                nodes.push(id);
            }
        }
        let mut edges: Vec<Edge> = Vec::new();
        for (&(src, dst), eps) in &edge_episodes {
            // Episodes are chronological; the last overlapping one wins the
            // weight slot.
            if let Some(ep) = eps.iter().filter(|e| e.overlaps(lo, hi)).next_back() {
                edges.push(Edge { src, dst, weight: ep.weight });
            }
        }
        let (snap, _) =
            Snapshot::from_raw_edges(i as usize, format!("{i:06}"), edges, nodes, directed)?;
        snapshots.push(snap);
    }

    let graph = DynamicGraph { registry, snapshots, directed };
    graph.check_invariants()?;
    Ok(IngestOutcome { graph, self_loops_dropped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn add_edge(time: f64, src: &str, dst: &str) -> GraphEvent {
        GraphEvent {
            time,
            kind: EventKind::AddEdge { src: src.into(), dst: dst.into(), weight: 1.0 },
        }
    }

    #[test]
    fn buckets_match_manual_trace() {
        let log = EventLog { events: vec![add_edge(0.5, "a", "b"), add_edge(1.5, "b", "c")] };
        let out = discretize_events(&log, 1.0, false).unwrap();
        let g = &out.graph;
        assert_eq!(g.num_timestamps(), 2);
        assert_eq!(g.snapshots[0].edges.len(), 1);
        assert_eq!(g.snapshots[1].edges.len(), 2);
    }

    #[test]
    fn single_event_single_bucket() {
        let log = EventLog { events: vec![add_edge(0.0, "a", "b")] };
        let out = discretize_events(&log, 10.0, false).unwrap();
        assert_eq!(out.graph.num_timestamps(), 1);
    }

    #[test]
    fn del_before_add_is_an_error() {
        let log = EventLog {
            events: vec![GraphEvent {
                time: 0.0,
                kind: EventKind::DelEdge { src: "a".into(), dst: "b".into() },
            }],
        };
        let err = discretize_events(&log, 1.0, false).unwrap_err();
        assert!(err.to_string().contains("before any add"));
    }

    #[test]
    fn empty_log_is_an_error() {
        let err = discretize_events(&EventLog::default(), 1.0, false).unwrap_err();
        assert!(err.to_string().contains("empty event log"));
    }

    #[test]
    fn non_positive_interval_is_an_error() {
        let log = EventLog { events: vec![add_edge(0.0, "a", "b")] };
        assert!(discretize_events(&log, 0.0, false).is_err());
        assert!(discretize_events(&log, -1.0, false).is_err());
    }

    #[test]
    fn deletion_takes_effect_in_following_interval() {
        let log = EventLog {
            events: vec![
                add_edge(0.2, "a", "b"),
                GraphEvent {
                    time: 1.0,
                    kind: EventKind::DelEdge { src: "a".into(), dst: "b".into() },
                },
                add_edge(2.5, "a", "c"),
            ],
        };
        let out = discretize_events(&log, 1.0, false).unwrap();
        let g = &out.graph;
        // deleted exactly at the start of bucket 1: still alive for that
        // instant, gone from bucket 2
        assert_eq!(g.snapshots[0].edges.len(), 1);
        assert_eq!(g.snapshots[1].edges.len(), 1);
        assert_eq!(g.snapshots[2].edges.len(), 1);
        let a = g.registry.id("a").unwrap();
        let c = g.registry.id("c").unwrap();
        let e = &g.snapshots[2].edges[0];
        assert_eq!((e.src.min(e.dst), e.src.max(e.dst)), (a.min(c), a.max(c)));
    }

    #[test]
    fn del_node_removes_incident_edges() {
        let log = EventLog {
            events: vec![
                add_edge(0.0, "a", "b"),
                add_edge(0.0, "b", "c"),
                GraphEvent { time: 1.5, kind: EventKind::DelNode { node: "b".into() } },
            ],
        };
        let out = discretize_events(&log, 1.0, false).unwrap();
        let g = &out.graph;
        assert_eq!(g.snapshots[1].edges.len(), 2); // alive for part of bucket 1
        // nothing left alive past bucket 1, so T == 2
        assert_eq!(g.num_timestamps(), 2);
    }

    #[test]
    fn isolated_node_from_add_node_event() {
        let log = EventLog {
            events: vec![
                GraphEvent { time: 0.0, kind: EventKind::AddNode { node: "lone".into() } },
                add_edge(0.1, "a", "b"),
            ],
        };
        let out = discretize_events(&log, 1.0, false).unwrap();
        let report = out.graph.validate();
        assert_eq!(report.snapshot_stats[0].isolated_nodes, 1);
    }

    #[test]
    fn jsonl_round_trip() {
        let text = r#"{"time":0.5,"kind":"add_edge","src":"a","dst":"b","weight":2.0}
{"time":1.0,"kind":"add_node","src":"c"}
{"time":2.0,"kind":"del_edge","src":"a","dst":"b"}"#;
        let log = EventLog::from_jsonl(text).unwrap();
        assert_eq!(log.events.len(), 3);
        assert_eq!(
            log.events[0].kind,
            EventKind::AddEdge { src: "a".into(), dst: "b".into(), weight: 2.0 }
        );
    }
}
