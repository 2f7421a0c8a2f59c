//! Self-contained HTML report: one SVG frame per timestamp plus the
//! embedded trajectory JSON. No external references of any kind.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::render::svg::{render_svg_frame, xml_escape, EmitSummary, PlotSpec};
use crate::trajectory::TrajectorySet;

const MAX_POINTS: usize = 1_000_000;

pub fn render_html(set: &TrajectorySet, spec: &PlotSpec) -> Result<String> {
    if set.total_points() > MAX_POINTS {
        return Err(Error::validation(format!(
            "{} points exceed the {MAX_POINTS} embedding limit; decimate first",
            set.total_points()
        )));
    }
    let full = render_svg_frame(set, spec, None)?;
    let timestamps = set.num_timestamps();

    // "</" must not appear raw inside an inline script block
    let json = set.to_json().replace("</", "<\\/");

    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n");
    html.push_str("<title>Embedding trajectories</title>\n");
    html.push_str(
        "<style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse}\n\
         td,th{border:1px solid #ccc;padding:4px 8px}details{margin:1em 0}</style>\n",
    );
    html.push_str("</head>\n<body>\n<h1>Embedding trajectories</h1>\n");
    html.push_str("<table>\n");
    let meta = &set.meta;
    for (key, value) in [
        ("method", meta.method.clone()),
        ("k", meta.k.to_string()),
        ("alpha", meta.alpha.to_string()),
        ("aggregation", meta.aggregation.clone()),
        ("anchors", meta.anchor_count.to_string()),
        ("reference_t", meta.reference_t.to_string()),
        ("timestamps", timestamps.to_string()),
        ("nodes", set.nodes.len().to_string()),
        ("points", set.total_points().to_string()),
    ] {
        html.push_str(&format!(
            "<tr><th>{}</th><td>{}</td></tr>\n",
            xml_escape(key),
            xml_escape(&value)
        ));
    }
    html.push_str("</table>\n<h2>All timestamps</h2>\n");
    html.push_str(&full);
    for t in 0..timestamps {
        html.push_str(&format!(
            "<details><summary>up to t={t}</summary>\n{}\n</details>\n",
            render_svg_frame(set, spec, Some(t))?
        ));
    }
    html.push_str(&format!(
        "<script type=\"application/json\" id=\"trajectory-data\">{json}</script>\n"
    ));
    html.push_str("</body>\n</html>\n");
    Ok(html)
}

pub fn emit_html(set: &TrajectorySet, spec: &PlotSpec, out: &Path) -> Result<EmitSummary> {
    let html = render_html(set, spec)?;
    fs::write(out, &html).map_err(|e| Error::io(out, e))?;
    Ok(EmitSummary {
        anchors: set.anchors.len(),
        trajectories: spec.highlights.len(),
        points: set.total_points(),
        bytes: html.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::svg::tests::tiny_set;
    use crate::trajectory::NodeTrack;

    #[test]
    fn html_has_no_external_urls() {
        let html = render_html(&tiny_set(), &PlotSpec::default()).unwrap();
        // the only "http" occurrences allowed are the SVG namespace
        // identifier, which browsers never fetch
        let stripped = html.replace("xmlns=\"http://www.w3.org/2000/svg\"", "");
        assert!(!stripped.contains("http://"));
        assert!(!stripped.contains("https://"));
        assert!(!stripped.contains("src="));
        assert!(!stripped.contains("href="));
    }

    #[test]
    fn embedded_json_parses_back_to_the_same_set() {
        let set = tiny_set();
        let html = render_html(&set, &PlotSpec::default()).unwrap();
        let embedded = html
            .split("<script type=\"application/json\" id=\"trajectory-data\">")
            .nth(1)
            .and_then(|s| s.split("</script>").next())
            .unwrap()
            .replace("<\\/", "</");
        let back = TrajectorySet::from_json(&embedded).unwrap();
        assert_eq!(back.to_json(), set.to_json());
    }

    #[test]
    fn oversize_input_is_rejected() {
        let mut set = tiny_set();
        set.nodes = vec![NodeTrack {
            id: 0,
            label: "big".into(),
            points: (0..=MAX_POINTS).map(|t| (t, 0.0, 0.0)).collect(),
        }];
        let err = render_html(&set, &PlotSpec::default()).unwrap_err();
        assert!(err.to_string().contains("decimate"));
    }
}
