//! Edge-list and manifest ingestion, plus JSON (de)serialization of graphs.
//!
//! Edge-list files are UTF-8 text, one `src<TAB>dst<TAB>weight` edge per
//! line, with `#` comment lines. Snapshot order comes either from sorted
//! file stems or from a manifest (JSON array of `{path, timestamp_label}`).

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, Edge, NodeRegistry, Snapshot};

/// A parsed graph together with ingestion warnings.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub graph: DynamicGraph,
    pub self_loops_dropped: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub timestamp_label: String,
}

/// Raw rows of one snapshot file, labels not yet interned.
struct RawSnapshot {
    timestamp_label: String,
    rows: Vec<(String, String, f64)>,
}

fn parse_edge_file(path: &Path, timestamp_label: String) -> Result<RawSnapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let weight: f64 = fields[2].trim().parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: format!("invalid weight {:?}", fields[2]),
        })?;
        if !weight.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("non-finite weight {weight}"),
            });
        }
        rows.push((fields[0].trim().to_string(), fields[1].trim().to_string(), weight));
    }
    Ok(RawSnapshot { timestamp_label, rows })
}

fn assemble(raws: Vec<RawSnapshot>, directed: bool) -> Result<IngestOutcome> {
    let mut registry = NodeRegistry::new();
    let mut snapshots = Vec::with_capacity(raws.len());
    let mut self_loops_dropped = 0;
    for (t, raw) in raws.into_iter().enumerate() {
        let edges: Vec<Edge> = raw
            .rows
            .into_iter()
            .map(|(src, dst, weight)| Edge {
                src: registry.intern(&src),
                dst: registry.intern(&dst),
                weight,
            })
            .collect();
        let (snap, loops) =
            Snapshot::from_raw_edges(t, raw.timestamp_label, edges, [], directed)?;
        self_loops_dropped += loops;
        snapshots.push(snap);
    }
    let graph = DynamicGraph { registry, snapshots, directed };
    graph.check_invariants()?;
    Ok(IngestOutcome { graph, self_loops_dropped })
}

/// Parses one snapshot per file. Files are ordered by their stem (the
/// filename-embedded timestamp), which also becomes the timestamp label.
pub fn parse_snapshots(paths: &[PathBuf], directed: bool) -> Result<IngestOutcome> {
    if paths.is_empty() {
        return Err(Error::validation("no snapshots"));
    }
    let mut ordered: Vec<(String, &PathBuf)> = paths
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.to_string_lossy().into_owned());
            (stem, p)
        })
        .collect();
    ordered.sort_by(|a, b| a.0.cmp(&b.0));

    // Files parse in parallel; the registry merge below is sequential so id
    // assignment stays deterministic.
    let raws: Vec<RawSnapshot> = ordered
        .par_iter()
        .map(|(stem, path)| parse_edge_file(path, stem.clone()))
        .collect::<Result<Vec<_>>>()?;
    assemble(raws, directed)
}

/// Reads a manifest file: a JSON array of `{path, timestamp_label}`.
/// Relative paths are resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if entries.is_empty() {
        return Err(Error::validation("no snapshots"));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    for entry in &mut entries {
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
    }
    Ok(entries)
}

/// Parses snapshots in the order declared by a manifest.
pub fn parse_manifest(manifest: &Path, directed: bool) -> Result<IngestOutcome> {
    let entries = read_manifest(manifest)?;
    let raws: Vec<RawSnapshot> = entries
        .par_iter()
        .map(|e| parse_edge_file(&e.path, e.timestamp_label.clone()))
        .collect::<Result<Vec<_>>>()?;
    assemble(raws, directed)
}

pub fn graph_to_json(graph: &DynamicGraph) -> String {
    serde_json::to_string(graph).expect("graph serialization cannot fail")
}

pub fn graph_from_json(text: &str) -> Result<DynamicGraph> {
    let graph: DynamicGraph = serde_json::from_str(text)
        .map_err(|e| Error::validation(format!("invalid graph JSON: {e}")))?;
    graph.check_invariants()?;
    Ok(graph)
}

pub fn save_graph(graph: &DynamicGraph, path: &Path) -> Result<()> {
    fs::write(path, graph_to_json(graph)).map_err(|e| Error::io(path, e))
}

pub fn load_graph(path: &Path) -> Result<DynamicGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    graph_from_json(&text)
}
