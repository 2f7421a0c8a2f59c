//! Embedding file formats.
//!
//! Text: header `N d timestamp_label`, then one `label v1 .. vd` line per
//! node, full-precision decimal (round-trips bit-exactly). Binary: the same
//! logical layout packed little-endian behind a `GTRB` magic. Format is
//! auto-detected on load.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::embedding::{EmbeddingMatrix, EmbeddingSeries};
use crate::error::{Error, Result};
use crate::graph::NodeRegistry;

const BINARY_MAGIC: &[u8; 4] = b"GTRB";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

impl EmbeddingFormat {
    pub fn extension(self) -> &'static str {
        match self {
            EmbeddingFormat::Text => "emb",
            EmbeddingFormat::Binary => "bemb",
        }
    }
}

fn matrix_to_text(m: &EmbeddingMatrix, registry: &NodeRegistry) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("{} {} {}\n", m.len(), m.dim(), m.timestamp_label));
    for &id in m.ids() {
        let label = registry
            .label(id)
            .ok_or_else(|| Error::validation(format!("node id {id} missing from registry")))?;
        if label.chars().any(char::is_whitespace) {
            return Err(Error::validation(format!(
                "label {label:?} contains whitespace; use the binary format"
            )));
        }
        out.push_str(label);
        for v in m.vector(id).expect("id is in matrix") {
            out.push(' ');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

fn matrix_to_binary(m: &EmbeddingMatrix, registry: &NodeRegistry) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(m.len() as u64).to_le_bytes());
    out.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    let label = m.timestamp_label.as_bytes();
    out.extend_from_slice(&(label.len() as u64).to_le_bytes());
    out.extend_from_slice(label);
    for &id in m.ids() {
        let node_label = registry
            .label(id)
            .ok_or_else(|| Error::validation(format!("node id {id} missing from registry")))?
            .as_bytes();
        out.extend_from_slice(&(node_label.len() as u64).to_le_bytes());
        out.extend_from_slice(node_label);
        for v in m.vector(id).expect("id is in matrix") {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Writes one file per snapshot into `dir`, named `snapshot_NNNN.<ext>`.
pub fn save_embeddings(
    series: &EmbeddingSeries,
    registry: &NodeRegistry,
    dir: &Path,
    format: EmbeddingFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(series.len());
    for m in series.matrices() {
        let path = dir.join(format!(
            "snapshot_{:04}.{}",
            m.timestamp_index,
            format.extension()
        ));
        match format {
            EmbeddingFormat::Text => {
                fs::write(&path, matrix_to_text(m, registry)?).map_err(|e| Error::io(&path, e))?
            }
            EmbeddingFormat::Binary => fs::write(&path, matrix_to_binary(m, registry)?)
                .map_err(|e| Error::io(&path, e))?,
        }
        paths.push(path);
    }
    Ok(paths)
}

/// One parsed snapshot file, labels not yet resolved to ids.
struct RawMatrix {
    timestamp_label: String,
    dim: usize,
    rows: Vec<(String, Vec<f64>)>,
}

fn parse_text(path: &Path, text: &str) -> Result<RawMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::validation(format!("{}: empty embedding file", path.display())))?;
    let mut parts = header.splitn(3, ' ');
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(1, "bad node count in header".into()))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(1, "bad dimension in header".into()))?;
    let timestamp_label = parts.next().unwrap_or("").to_string();
    let mut rows = Vec::with_capacity(n);
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != dim + 1 {
            return Err(parse_err(
                lineno + 1,
                format!("expected {} fields, found {}", dim + 1, tokens.len()),
            ));
        }
        let mut values = Vec::with_capacity(dim);
        for tok in &tokens[1..] {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(lineno + 1, format!("invalid value {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno + 1, format!("non-finite value {v}")));
            }
            values.push(v);
        }
        rows.push((tokens[0].to_string(), values));
    }
    if rows.len() != n {
        return Err(Error::validation(format!(
            "{}: header declares {n} nodes, found {}",
            path.display(),
            rows.len()
        )));
    }
    Ok(RawMatrix { timestamp_label, dim, rows })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let slice = self.bytes.get(self.at..self.at + len).ok_or_else(|| {
            Error::validation(format!(
                "{}: truncated binary embedding file",
                self.path.display()
            ))
        })?;
        self.at += len;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self, len: usize) -> Result<String> {
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| {
            Error::validation(format!("{}: label is not UTF-8", self.path.display()))
        })
    }
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<RawMatrix> {
    let mut cur = Cursor { bytes, at: BINARY_MAGIC.len(), path };
    let n = cur.u64()? as usize;
    let dim = cur.u64()? as usize;
    let label_len = cur.u64()? as usize;
    let timestamp_label = cur.string(label_len)?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let len = cur.u64()? as usize;
        let label = cur.string(len)?;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            let v = cur.f64()?;
            if !v.is_finite() {
                return Err(Error::validation(format!(
                    "{}: non-finite embedding value",
                    path.display()
                )));
            }
            values.push(v);
        }
        rows.push((label, values));
    }
    Ok(RawMatrix { timestamp_label, dim, rows })
}

/// Loads a series from per-snapshot files in the given order.
///
/// With a registry, every label must already be known; without one, a fresh
/// registry is built in file order and returned.
pub fn load_embeddings(
    paths: &[PathBuf],
    registry: Option<&NodeRegistry>,
) -> Result<(EmbeddingSeries, NodeRegistry)> {
    if paths.is_empty() {
        return Err(Error::validation("no embedding files"));
    }
    let mut raws = Vec::with_capacity(paths.len());
    for path in paths {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let raw = if bytes.starts_with(BINARY_MAGIC) {
            parse_binary(path, &bytes)?
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::validation(format!("{}: not UTF-8", path.display())))?;
            parse_text(path, &text)?
        };
        raws.push(raw);
    }
    let dim = raws[0].dim;
    for (i, raw) in raws.iter().enumerate() {
        if raw.dim != dim {
            return Err(Error::validation(format!(
                "dimension mismatch: {} has d={}, {} has d={dim}",
                paths[i].display(),
                raw.dim,
                paths[0].display()
            )));
        }
    }

    let mut effective = registry.cloned().unwrap_or_default();
    let mut matrices = Vec::with_capacity(raws.len());
    for (t, raw) in raws.into_iter().enumerate() {
        let mut pairs: Vec<(usize, Vec<f64>)> = Vec::with_capacity(raw.rows.len());
        for (label, values) in raw.rows {
            let id = match registry {
                Some(reg) => reg.id(&label).ok_or_else(|| {
                    Error::validation(format!(
                        "{}: label {label:?} not in the provided graph",
                        paths[t].display()
                    ))
                })?,
                None => effective.intern(&label),
            };
            pairs.push((id, values));
        }
        pairs.sort_by_key(|(id, _)| *id);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::validation(format!(
                "{}: duplicate node label",
                paths[t].display()
            )));
        }
        let ids: Vec<usize> = pairs.iter().map(|(id, _)| *id).collect();
        let mut rows = Array2::zeros((ids.len(), dim));
        for (r, (_, values)) in pairs.iter().enumerate() {
            for (k, &v) in values.iter().enumerate() {
                rows[[r, k]] = v;
            }
        }
        matrices.push(EmbeddingMatrix::new(t, raw.timestamp_label, ids, rows)?);
    }
    let series = EmbeddingSeries::new(matrices)?;
    Ok((series, effective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn sample_series() -> (EmbeddingSeries, NodeRegistry) {
        let mut reg = NodeRegistry::new();
        reg.intern("a");
        reg.intern("b");
        reg.intern("c");
        let m0 = EmbeddingMatrix::new(
            0,
            "1998",
            vec![0, 1, 2],
            arr2(&[[0.1, -0.25], [1e-300, 2.0], [0.30000000000000004, 3.5]]),
        )
        .unwrap();
        let m1 = EmbeddingMatrix::new(
            1,
            "1999",
            vec![0, 2],
            arr2(&[[4.0, 5.0], [6.0, 7.0]]),
        )
        .unwrap();
        (EmbeddingSeries::new(vec![m0, m1]).unwrap(), reg)
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let (series, reg) = sample_series();
        let dir = tempfile::tempdir().unwrap();
        let paths = save_embeddings(&series, &reg, dir.path(), EmbeddingFormat::Text).unwrap();
        let (back, _) = load_embeddings(&paths, Some(&reg)).unwrap();
        for t in 0..series.len() {
            let (a, b) = (series.matrix(t).unwrap(), back.matrix(t).unwrap());
            assert_eq!(a.ids(), b.ids());
            assert_eq!(a.timestamp_label, b.timestamp_label);
            for (x, y) in a.rows.iter().zip(b.rows.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let (series, reg) = sample_series();
        let dir = tempfile::tempdir().unwrap();
        let paths = save_embeddings(&series, &reg, dir.path(), EmbeddingFormat::Binary).unwrap();
        let (back, _) = load_embeddings(&paths, Some(&reg)).unwrap();
        for t in 0..series.len() {
            let (a, b) = (series.matrix(t).unwrap(), back.matrix(t).unwrap());
            for (x, y) in a.rows.iter().zip(b.rows.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p0 = dir.path().join("t0.emb");
        let p1 = dir.path().join("t1.emb");
        fs::write(&p0, "1 8 t0\na 1 2 3 4 5 6 7 8\n").unwrap();
        fs::write(&p1, "1 16 t1\na 1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16\n").unwrap();
        let err = load_embeddings(&[p0, p1], None).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"));
    }

    #[test]
    fn unknown_label_with_registry_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t0.emb");
        fs::write(&p, "1 2 t0\nmystery 1.0 2.0\n").unwrap();
        let mut reg = NodeRegistry::new();
        reg.intern("known");
        let err = load_embeddings(&[p], Some(&reg)).unwrap_err();
        assert!(err.to_string().contains("mystery"));
    }

    #[test]
    fn loading_without_registry_builds_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t0.emb");
        fs::write(&p, "2 2 t0\nx 1.0 2.0\ny 3.0 4.0\n").unwrap();
        let (series, reg) = load_embeddings(&[p], None).unwrap();
        assert_eq!(reg.id("y"), Some(1));
        assert_eq!(series.matrix(0).unwrap().vector(1).unwrap()[0], 3.0);
    }
}
