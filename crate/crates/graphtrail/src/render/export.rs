//! Machine-readable exports: the metrics CSV, the scalar summary JSON, and
//! trajectory JSON on disk.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::analytics::MetricReport;
use crate::error::{Error, Result};
use crate::trajectory::TrajectorySet;

/// CSV with one row per common node per transition:
/// `node,t,jaccard_n,rbo_raw,rbo_norm,arc,l1,l2`.
pub fn metrics_csv_string(report: &MetricReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["node", "t", "jaccard_n", "rbo_raw", "rbo_norm", "arc", "l1", "l2"])
        .map_err(|e| Error::validation(format!("csv: {e}")))?;
    for row in &report.rows {
        writer
            .write_record([
                row.label.as_str(),
                &row.timestamp_index.to_string(),
                &row.jaccard.to_string(),
                &row.rbo_raw.to_string(),
                &row.rbo_normalized.to_string(),
                &row.arc.to_string(),
                &row.l1.to_string(),
                &row.l2.to_string(),
            ])
            .map_err(|e| Error::validation(format!("csv: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::validation(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn export_metrics_csv(report: &MetricReport, out: &Path) -> Result<()> {
    fs::write(out, metrics_csv_string(report)?).map_err(|e| Error::io(out, e))
}

#[derive(Debug, Serialize)]
struct MetricSummary<'a> {
    narc: f64,
    macro_rbo_raw: f64,
    macro_rbo_normalized: f64,
    movement_l1: f64,
    movement_l2: f64,
    config: &'a str,
}

/// JSON with the scalar metrics and the config fingerprint they came from.
pub fn metrics_summary_json(report: &MetricReport) -> String {
    serde_json::to_string_pretty(&MetricSummary {
        narc: report.narc,
        macro_rbo_raw: report.macro_rbo_raw,
        macro_rbo_normalized: report.macro_rbo_normalized,
        movement_l1: report.movement_l1,
        movement_l2: report.movement_l2,
        config: &report.config_fingerprint,
    })
    .expect("summary serialization cannot fail")
}

pub fn export_metrics_summary(report: &MetricReport, out: &Path) -> Result<()> {
    fs::write(out, metrics_summary_json(report)).map_err(|e| Error::io(out, e))
}

pub fn export_trajectories_json(set: &TrajectorySet, out: &Path) -> Result<()> {
    fs::write(out, set.to_json()).map_err(|e| Error::io(out, e))
}

pub fn import_trajectories_json(path: &Path) -> Result<TrajectorySet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrajectorySet::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{MetricReport, MetricRow};

    fn report_with(rows: Vec<MetricRow>) -> MetricReport {
        MetricReport {
            rows,
            narc: 0.25,
            macro_rbo_raw: 0.2,
            macro_rbo_normalized: 0.75,
            movement_l1: 1.5,
            movement_l2: 1.1,
            config_fingerprint: "metrics(test)".into(),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = metrics_csv_string(&report_with(vec![])).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("node,t,"));
    }

    #[test]
    fn row_values_round_trip_through_text() {
        let row = MetricRow {
            node_id: 3,
            label: "n003".into(),
            timestamp_index: 2,
            jaccard: 0.5,
            rbo_raw: 0.30000000000000004,
            rbo_normalized: 0.9,
            arc: 2.0 / 3.0,
            l1: 7.0,
            l2: 5.0,
        };
        let csv = metrics_csv_string(&report_with(vec![row])).unwrap();
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "n003");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.5);
        assert_eq!(fields[3].parse::<f64>().unwrap().to_bits(), 0.30000000000000004f64.to_bits());
    }

    #[test]
    fn summary_json_carries_the_scalars() {
        let json = metrics_summary_json(&report_with(vec![]));
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["narc"], 0.25);
        assert_eq!(value["macro_rbo_normalized"], 0.75);
        assert_eq!(value["config"], "metrics(test)");
    }

    #[test]
    fn trajectory_file_round_trip() {
        let set = crate::render::svg::tests::tiny_set();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectories.json");
        export_trajectories_json(&set, &path).unwrap();
        let back = import_trajectories_json(&path).unwrap();
        assert_eq!(back.to_json(), set.to_json());
    }
}
