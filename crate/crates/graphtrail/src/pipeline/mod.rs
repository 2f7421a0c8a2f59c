//! The end-to-end pipeline behind the CLI: ingest -> embed -> trajectory ->
//! analyze -> render, driven by one JSON config. Every stage writes its
//! artifact plus a provenance sidecar; fixed seeds and `threads=1` make the
//! whole chain byte-reproducible.

pub mod provenance;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::{compute_report, MetricConfig, MetricInput, MetricSpaceKind};
use crate::embedding::{
    load_embeddings, save_embeddings, train_series, EmbeddingFormat, EmbeddingSeries,
    TrainingConfig,
};
use crate::error::{Error, Result};
use crate::graph::events::{discretize_events, EventLog};
use crate::graph::parse::{load_graph, parse_manifest, save_graph};
use crate::graph::DynamicGraph;
use crate::projection::{ProjectionConfig, ProjectionMethod, TsneConfig};
use crate::render::{
    emit_html, emit_svg, export_metrics_csv, export_metrics_summary, export_trajectories_json,
    import_trajectories_json, PlotSpec,
};
use crate::trajectory::{compute_trajectories, select_anchors, AlignmentConfig};

pub use provenance::{hash_file, read_provenance, sha256_hex, Provenance};

pub const ENV_PREFIX: &str = "GRAPHTRAIL_";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_THREADS: usize = 1;

/// Where the snapshots come from: a manifest of edge-list files, or an
/// event log discretized at a fixed interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputConfig {
    Manifest {
        manifest: PathBuf,
        #[serde(default)]
        directed: bool,
    },
    Events {
        event_log: PathBuf,
        interval: f64,
        #[serde(default)]
        directed: bool,
    },
}

/// Training knobs; seeds left unset inherit the pipeline seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub lambda_link: f64,
    pub lambda_node: f64,
    pub lambda_edge: f64,
    pub seed: Option<u64>,
    /// JSON file: one `{label: value}` object per snapshot.
    pub node_targets: Option<PathBuf>,
    pub use_edge_weights: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let base = TrainingConfig::default();
        TrainSettings {
            dim: base.dim,
            epochs: base.epochs,
            learning_rate: base.learning_rate,
            negatives_per_positive: base.negatives_per_positive,
            walks_per_node: base.walks_per_node,
            walk_length: base.walk_length,
            window: base.window,
            lambda_link: base.lambda_link,
            lambda_node: base.lambda_node,
            lambda_edge: base.lambda_edge,
            seed: None,
            node_targets: None,
            use_edge_weights: false,
        }
    }
}

impl TrainSettings {
    pub fn to_training_config(&self, seed: u64, threads: usize) -> TrainingConfig {
        TrainingConfig {
            dim: self.dim,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            negatives_per_positive: self.negatives_per_positive,
            walks_per_node: self.walks_per_node,
            walk_length: self.walk_length,
            window: self.window,
            lambda_link: self.lambda_link,
            lambda_node: self.lambda_node,
            lambda_edge: self.lambda_edge,
            rng_seed: self.seed.unwrap_or(seed),
            threads,
        }
    }
}

/// Exactly one embedding source: train here, or load external matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    Train(TrainSettings),
    Load { files: Vec<PathBuf> },
}

/// Projection knobs; `method` stays a string so unsupported names surface
/// as proper errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionSettings {
    pub method: String,
    pub perplexity: f64,
    pub iterations: usize,
    pub early_exaggeration_factor: f64,
    pub early_exaggeration_iters: usize,
    pub learning_rate: Option<f64>,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    pub seed: Option<u64>,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        let base = TsneConfig::default();
        ProjectionSettings {
            method: "tsne".to_string(),
            perplexity: base.perplexity,
            iterations: base.iterations,
            early_exaggeration_factor: base.early_exaggeration_factor,
            early_exaggeration_iters: base.early_exaggeration_iters,
            learning_rate: base.learning_rate,
            momentum_initial: base.momentum_initial,
            momentum_final: base.momentum_final,
            momentum_switch_iter: base.momentum_switch_iter,
            seed: None,
        }
    }
}

impl ProjectionSettings {
    pub fn to_projection_config(&self, seed: u64) -> Result<ProjectionConfig> {
        let method: ProjectionMethod = self.method.parse()?;
        Ok(ProjectionConfig {
            method,
            tsne: TsneConfig {
                perplexity: self.perplexity,
                iterations: self.iterations,
                early_exaggeration_factor: self.early_exaggeration_factor,
                early_exaggeration_iters: self.early_exaggeration_iters,
                learning_rate: self.learning_rate,
                momentum_initial: self.momentum_initial,
                momentum_final: self.momentum_final,
                momentum_switch_iter: self.momentum_switch_iter,
                rng_seed: self.seed.unwrap_or(seed),
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub embedding: EmbeddingSource,
    #[serde(default)]
    pub projection: ProjectionSettings,
    #[serde(default)]
    pub alignment: AlignmentConfig,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub plot: PlotSpec,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
}

/// CLI flag overrides for the three global settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSettings {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
}

/// Precedence per setting: flag > `GRAPHTRAIL_*` env var > config > default.
pub fn resolve_settings(
    flags: &Overrides,
    env: &dyn Fn(&str) -> Option<String>,
    config: &PipelineConfig,
) -> Result<ResolvedSettings> {
    let env_u64 = |name: &str| -> Result<Option<u64>> {
        match env(name) {
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| Error::validation(format!("{ENV_PREFIX}{name}: bad value {v:?}"))),
            None => Ok(None),
        }
    };
    let seed = match flags.seed {
        Some(s) => s,
        None => env_u64("SEED")?.or(config.seed).unwrap_or(DEFAULT_SEED),
    };
    let threads = match flags.threads {
        Some(t) => t,
        None => env_u64("THREADS")?
            .map(|t| t as usize)
            .or(config.threads)
            .unwrap_or(DEFAULT_THREADS),
    };
    if threads == 0 {
        return Err(Error::validation("threads must be >= 1"));
    }
    let out_dir = flags
        .out_dir
        .clone()
        .or_else(|| env("OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| config.outputs.dir.clone());
    Ok(ResolvedSettings { out_dir, seed, threads })
}

/// Reads process environment variables with the CI prefix.
pub fn process_env(name: &str) -> Option<String> {
    std::env::var(format!("{ENV_PREFIX}{name}")).ok()
}

fn absolutize(path: &mut PathBuf, base: &Path) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

/// A loaded config with resolved settings; one instance drives any subset of
/// stages.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub settings: ResolvedSettings,
}

impl Pipeline {
    /// Loads the config file, applies flag/env/config precedence, and makes
    /// every input path absolute so provenance is location-independent.
    pub fn load(
        config_path: &Path,
        flags: &Overrides,
        env: &dyn Fn(&str) -> Option<String>,
    ) -> Result<Pipeline> {
        let text = fs::read_to_string(config_path).map_err(|e| Error::io(config_path, e))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::json(config_path, e))?;
        let base = config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        match &mut config.input {
            InputConfig::Manifest { manifest, .. } => absolutize(manifest, &base),
            InputConfig::Events { event_log, .. } => absolutize(event_log, &base),
        }
        match &mut config.embedding {
            EmbeddingSource::Train(settings) => {
                if let Some(targets) = &mut settings.node_targets {
                    absolutize(targets, &base);
                }
            }
            EmbeddingSource::Load { files } => {
                for f in files {
                    absolutize(f, &base);
                }
            }
        }
        let settings = resolve_settings(flags, env, &config)?;
        let mut pipeline = Pipeline { config, settings };
        // record the effective values back into the config snapshot used for
        // provenance
        pipeline.config.seed = Some(pipeline.settings.seed);
        pipeline.config.threads = Some(pipeline.settings.threads);
        pipeline.config.outputs.dir = pipeline.settings.out_dir.clone();
        Ok(pipeline)
    }

    fn resolved_config_value(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }

    fn provenance(&self, stage: &str) -> Provenance {
        Provenance::new(
            stage,
            self.settings.seed,
            self.settings.threads,
            self.resolved_config_value(),
        )
    }

    pub fn graph_path(&self) -> PathBuf {
        self.settings.out_dir.join("graph.json")
    }

    pub fn embeddings_dir(&self) -> PathBuf {
        self.settings.out_dir.join("embeddings")
    }

    pub fn trajectories_path(&self) -> PathBuf {
        self.settings.out_dir.join("trajectories.json")
    }

    pub fn metrics_csv_path(&self) -> PathBuf {
        self.settings.out_dir.join("metrics.csv")
    }

    pub fn metrics_summary_path(&self) -> PathBuf {
        self.settings.out_dir.join("metrics_summary.json")
    }

    pub fn svg_path(&self) -> PathBuf {
        self.settings.out_dir.join("plot.svg")
    }

    pub fn html_path(&self) -> PathBuf {
        self.settings.out_dir.join("plot.html")
    }

    fn ensure_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.settings.out_dir)
            .map_err(|e| Error::io(&self.settings.out_dir, e))
    }

    fn require(&self, path: &Path) -> Result<()> {
        if path.exists() {
            Ok(())
        } else {
            Err(Error::MissingArtifact(path.to_path_buf()))
        }
    }

    /// Parses or discretizes the input into `graph.json`.
    pub fn ingest(&self) -> Result<PathBuf> {
        self.ensure_out_dir()?;
        let mut prov = self.provenance("ingest");
        let outcome = match &self.config.input {
            InputConfig::Manifest { manifest, directed } => {
                prov.record_input(manifest)?;
                let out = parse_manifest(manifest, *directed)?;
                for entry in crate::graph::parse::read_manifest(manifest)? {
                    prov.record_input(&entry.path)?;
                }
                out
            }
            InputConfig::Events { event_log, interval, directed } => {
                prov.record_input(event_log)?;
                let log = EventLog::load(event_log)?;
                discretize_events(&log, *interval, *directed)?
            }
        };
        let report = outcome.graph.validate();
        if !report.ok() {
            return Err(Error::validation(format!(
                "graph invariant breach: {}",
                report.breaches.join("; ")
            )));
        }
        let path = self.graph_path();
        save_graph(&outcome.graph, &path)?;
        prov.record_output(&path);
        prov.write_for(&path)?;
        Ok(path)
    }

    fn load_graph_artifact(&self) -> Result<DynamicGraph> {
        self.require(&self.graph_path())?;
        load_graph(&self.graph_path())
    }

    fn load_node_targets(
        &self,
        graph: &DynamicGraph,
        path: &Path,
    ) -> Result<Vec<BTreeMap<usize, f64>>> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let labeled: Vec<BTreeMap<String, f64>> =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        labeled
            .into_iter()
            .map(|snapshot| {
                snapshot
                    .into_iter()
                    .map(|(label, value)| {
                        graph.registry.id(&label).map(|id| (id, value)).ok_or_else(|| {
                            Error::validation(format!(
                                "node target label {label:?} not in the graph"
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Trains (or loads) the embedding series and writes one text file per
    /// snapshot under `embeddings/`.
    pub fn embed(&self) -> Result<Vec<PathBuf>> {
        self.ensure_out_dir()?;
        let mut prov = self.provenance("embed");
        let graph = self.load_graph_artifact()?;
        prov.record_input(&self.graph_path())?;
        let series: EmbeddingSeries = match &self.config.embedding {
            EmbeddingSource::Train(settings) => {
                let cfg = settings.to_training_config(self.settings.seed, self.settings.threads);
                let targets = match &settings.node_targets {
                    Some(path) => {
                        prov.record_input(path)?;
                        Some(self.load_node_targets(&graph, path)?)
                    }
                    None => None,
                };
                train_series(&graph, &cfg, targets.as_deref(), settings.use_edge_weights)?
            }
            EmbeddingSource::Load { files } => {
                for f in files {
                    prov.record_input(f)?;
                }
                let (series, _) = load_embeddings(files, Some(&graph.registry))?;
                series.check_alignment(&graph)?;
                series
            }
        };
        let dir = self.embeddings_dir();
        let paths = save_embeddings(&series, &graph.registry, &dir, EmbeddingFormat::Text)?;
        for p in &paths {
            prov.record_output(p);
        }
        prov.write_for(&dir.join("series"))?;
        Ok(paths)
    }

    fn load_series_artifact(
        &self,
        graph: &DynamicGraph,
    ) -> Result<(EmbeddingSeries, Vec<PathBuf>)> {
        let dir = self.embeddings_dir();
        self.require(&dir)?;
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "emb" || e == "bemb").unwrap_or(false))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::MissingArtifact(dir));
        }
        let (series, _) = load_embeddings(&files, Some(&graph.registry))?;
        Ok((series, files))
    }

    /// Selects anchors, projects them, aligns every node at every timestamp,
    /// and writes `trajectories.json`.
    pub fn trajectory(&self) -> Result<PathBuf> {
        self.ensure_out_dir()?;
        let mut prov = self.provenance("trajectory");
        let graph = self.load_graph_artifact()?;
        prov.record_input(&self.graph_path())?;
        let (series, files) = self.load_series_artifact(&graph)?;
        for f in &files {
            prov.record_input(f)?;
        }
        let projection = self.config.projection.to_projection_config(self.settings.seed)?;
        let anchors = select_anchors(&graph, &series, &self.config.alignment, &projection)?;
        let set = compute_trajectories(&graph, &series, &anchors, &self.config.alignment)?;
        for w in &set.warnings {
            eprintln!("warning: {w}");
        }
        let path = self.trajectories_path();
        export_trajectories_json(&set, &path)?;
        prov.record_output(&path);
        prov.write_for(&path)?;
        Ok(path)
    }

    /// Computes the metric report into `metrics.csv` and
    /// `metrics_summary.json`.
    pub fn analyze(&self) -> Result<(PathBuf, PathBuf)> {
        self.ensure_out_dir()?;
        let mut prov = self.provenance("analyze");
        let cfg = &self.config.metrics;
        let report = match cfg.space {
            MetricSpaceKind::RawEmbedding => {
                let graph = self.load_graph_artifact()?;
                prov.record_input(&self.graph_path())?;
                let (series, files) = self.load_series_artifact(&graph)?;
                for f in &files {
                    prov.record_input(f)?;
                }
                compute_report(&MetricInput::Embeddings(&series), cfg, Some(&graph.registry))?
            }
            MetricSpaceKind::Projected2d => {
                self.require(&self.trajectories_path())?;
                prov.record_input(&self.trajectories_path())?;
                let set = import_trajectories_json(&self.trajectories_path())?;
                compute_report(&MetricInput::Projected(&set), cfg, None)?
            }
        };
        let csv_path = self.metrics_csv_path();
        let summary_path = self.metrics_summary_path();
        export_metrics_csv(&report, &csv_path)?;
        export_metrics_summary(&report, &summary_path)?;
        prov.record_output(&csv_path);
        prov.record_output(&summary_path);
        prov.write_for(&csv_path)?;
        Ok((csv_path, summary_path))
    }

    /// Renders `plot.svg` and the self-contained `plot.html`.
    pub fn render(&self) -> Result<Vec<PathBuf>> {
        self.ensure_out_dir()?;
        let mut prov = self.provenance("render");
        self.require(&self.trajectories_path())?;
        prov.record_input(&self.trajectories_path())?;
        let set = import_trajectories_json(&self.trajectories_path())?;
        let svg_path = self.svg_path();
        let html_path = self.html_path();
        emit_svg(&set, &self.config.plot, &svg_path)?;
        emit_html(&set, &self.config.plot, &html_path)?;
        prov.record_output(&svg_path);
        prov.record_output(&html_path);
        prov.write_for(&svg_path)?;
        Ok(vec![svg_path, html_path])
    }

    /// Runs every stage in order and returns the five primary artifacts.
    pub fn run_all(&self) -> Result<Vec<PathBuf>> {
        let graph = self.ingest()?;
        self.embed()?;
        let trajectories = self.trajectory()?;
        let (csv, _summary) = self.analyze()?;
        let rendered = self.render()?;
        Ok(vec![graph, self.embeddings_dir(), trajectories, csv, rendered[0].clone()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_config() -> PipelineConfig {
        serde_json::from_str(
            r#"{
                "input": {"manifest": "m.json"},
                "embedding": {"train": {}}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn precedence_flag_beats_env_beats_config_beats_default() {
        let mut config = minimal_config();
        config.seed = Some(7);
        config.threads = Some(3);
        config.outputs.dir = PathBuf::from("cfg_dir");

        let no_env = |_: &str| None;
        let env_set = |name: &str| match name {
            "SEED" => Some("9".to_string()),
            "THREADS" => Some("5".to_string()),
            "OUT_DIR" => Some("env_dir".to_string()),
            _ => None,
        };
        let flags = Overrides {
            out_dir: Some(PathBuf::from("flag_dir")),
            seed: Some(11),
            threads: Some(2),
        };

        // flag wins over everything
        let r = resolve_settings(&flags, &env_set, &config).unwrap();
        assert_eq!(r, ResolvedSettings { out_dir: "flag_dir".into(), seed: 11, threads: 2 });
        // env wins over config
        let r = resolve_settings(&Overrides::default(), &env_set, &config).unwrap();
        assert_eq!(r, ResolvedSettings { out_dir: "env_dir".into(), seed: 9, threads: 5 });
        // config wins over default
        let r = resolve_settings(&Overrides::default(), &no_env, &config).unwrap();
        assert_eq!(r, ResolvedSettings { out_dir: "cfg_dir".into(), seed: 7, threads: 3 });
        // defaults
        let r = resolve_settings(&Overrides::default(), &no_env, &minimal_config()).unwrap();
        assert_eq!(r, ResolvedSettings { out_dir: "out".into(), seed: DEFAULT_SEED, threads: 1 });
    }

    #[test]
    fn bad_env_value_is_a_validation_error() {
        let env = |name: &str| (name == "SEED").then(|| "not-a-number".to_string());
        let err = resolve_settings(&Overrides::default(), &env, &minimal_config()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn embedding_source_is_exactly_one_of_train_or_load() {
        let both = r#"{
            "input": {"manifest": "m.json"},
            "embedding": {"train": {}, "load": {"files": []}}
        }"#;
        assert!(serde_json::from_str::<PipelineConfig>(both).is_err());
        let neither = r#"{"input": {"manifest": "m.json"}, "embedding": {}}"#;
        assert!(serde_json::from_str::<PipelineConfig>(neither).is_err());
    }

    #[test]
    fn unsupported_projection_method_errors() {
        let mut config = minimal_config();
        config.projection.method = "umap".to_string();
        let err = config.projection.to_projection_config(1).unwrap_err();
        assert!(err.to_string().contains("unsupported method"));
    }
}
