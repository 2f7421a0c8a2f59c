//! SGD training of the shallow embedding model over a snapshot sequence.
//!
//! Link supervision comes from skip-gram pairs harvested from weighted
//! random walks, with unigram^0.75 negative sampling. Snapshot t > 0 warm
//! starts from snapshot t-1; new nodes draw Gaussian rows with std 1/sqrt(d).
//! Single-threaded mode is bit-deterministic for a fixed seed; `threads > 1`
//! trains per-epoch shards on parameter copies and averages them.

use std::collections::{BTreeMap, HashMap};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::embedding::model::{link_pair_factor, LossWeights, ModelParams};
use crate::embedding::{EmbeddingMatrix, EmbeddingSeries};
use crate::error::{Error, Result};
use crate::graph::DynamicGraph;

#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub dim: usize,
    pub epochs: usize,
    /// Initial learning rate, linearly decayed to 1e-4 of itself.
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub lambda_link: f64,
    pub lambda_node: f64,
    pub lambda_edge: f64,
    pub rng_seed: u64,
    /// 1 = deterministic sequential mode; >1 = sharded model averaging.
    pub threads: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 64,
            epochs: 5,
            learning_rate: 0.025,
            negatives_per_positive: 5,
            walks_per_node: 10,
            walk_length: 20,
            window: 5,
            lambda_link: 1.0,
            lambda_node: 0.0,
            lambda_edge: 0.0,
            rng_seed: 42,
            threads: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::validation(format!("dim {} < 2", self.dim)));
        }
        if self.lambda_link < 0.0 || self.lambda_node < 0.0 || self.lambda_edge < 0.0 {
            return Err(Error::validation("loss weights must be non-negative"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation("learning rate must be positive"));
        }
        if self.threads == 0 {
            return Err(Error::validation("threads must be >= 1"));
        }
        if self.window == 0 || self.walk_length == 0 {
            return Err(Error::validation("window and walk_length must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Example {
    Link { center: usize, context: usize },
    Node { row: usize, target: f64 },
    Edge { src: usize, dst: usize, weight: f64 },
}

/// Cumulative unigram^0.75 table over walk occurrences.
struct NegativeTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl NegativeTable {
    fn build(counts: &[u64]) -> Self {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut total = 0.0;
        for &c in counts {
            total += (c as f64).powf(0.75);
            cumulative.push(total);
        }
        NegativeTable { cumulative, total }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        if self.total <= 0.0 {
            return None;
        }
        let r = rng.random::<f64>() * self.total;
        Some(self.cumulative.partition_point(|&c| c <= r).min(self.cumulative.len() - 1))
    }
}

struct SnapshotProblem {
    examples: Vec<Example>,
    negatives: NegativeTable,
}

fn build_walk_adjacency(
    n: usize,
    edges: &[(usize, usize, f64)],
    directed: bool,
) -> Vec<Vec<(usize, f64)>> {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(src, dst, w) in edges {
        // Negative weights (e.g. cosine-similarity graphs) carry no walk mass.
        let w = w.max(0.0);
        if w > 0.0 {
            adj[src].push((dst, w));
            if !directed {
                adj[dst].push((src, w));
            }
        }
    }
    adj
}

fn random_walk(
    adjacency: &[Vec<(usize, f64)>],
    start: usize,
    length: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut walk = Vec::with_capacity(length);
    walk.push(start);
    let mut current = start;
    for _ in 1..length {
        let neighbors = &adjacency[current];
        if neighbors.is_empty() {
            break;
        }
        let total: f64 = neighbors.iter().map(|&(_, w)| w).sum();
        let mut r = rng.random::<f64>() * total;
        let mut next = neighbors[neighbors.len() - 1].0;
        for &(node, w) in neighbors {
            if r < w {
                next = node;
                break;
            }
            r -= w;
        }
        walk.push(next);
        current = next;
    }
    walk
}

fn build_problem(
    n: usize,
    edges: &[(usize, usize, f64)],
    directed: bool,
    cfg: &TrainingConfig,
    node_examples: Vec<Example>,
    edge_examples: Vec<Example>,
    rng: &mut ChaCha8Rng,
) -> SnapshotProblem {
    let adjacency = build_walk_adjacency(n, edges, directed);
    let mut counts = vec![0u64; n];
    let mut examples = Vec::new();
    for _round in 0..cfg.walks_per_node {
        for start in 0..n {
            let walk = random_walk(&adjacency, start, cfg.walk_length, rng);
            for &node in &walk {
                counts[node] += 1;
            }
            for (i, &center) in walk.iter().enumerate() {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(walk.len() - 1);
                for j in lo..=hi {
                    if j != i {
                        examples.push(Example::Link { center, context: walk[j] });
                    }
                }
            }
        }
    }
    examples.extend(node_examples);
    examples.extend(edge_examples);
    SnapshotProblem { examples, negatives: NegativeTable::build(&counts) }
}

/// One sequential SGD sweep over `examples`, mutating `params` in place.
#[allow(clippy::too_many_arguments)]
fn sgd_pass(
    params: &mut ModelParams,
    examples: &[Example],
    negatives: &NegativeTable,
    weights: &LossWeights,
    cfg: &TrainingConfig,
    rng: &mut ChaCha8Rng,
    step_offset: usize,
    total_steps: usize,
) {
    let d = cfg.dim;
    let mut center_grad = vec![0.0; d];
    for (i, ex) in examples.iter().enumerate() {
        let progress = (step_offset + i) as f64 / total_steps.max(1) as f64;
        let lr = cfg.learning_rate * (1.0 - progress).max(1e-4);
        match *ex {
            Example::Link { center, context } => {
                center_grad.iter_mut().for_each(|g| *g = 0.0);
                for slot in 0..=cfg.negatives_per_positive {
                    let (target, label) = if slot == 0 {
                        (context, 1.0)
                    } else {
                        let mut pick = None;
                        for _ in 0..10 {
                            match negatives.sample(rng) {
                                Some(neg) if neg != context => {
                                    pick = Some(neg);
                                    break;
                                }
                                Some(_) => continue,
                                None => break,
                            }
                        }
                        match pick {
                            Some(neg) => (neg, 0.0),
                            None => continue,
                        }
                    };
                    let mut dot = 0.0;
                    for k in 0..d {
                        dot += params.embeddings[[center, k]] * params.context[[target, k]];
                    }
                    let g = weights.link * link_pair_factor(dot, label);
                    for k in 0..d {
                        center_grad[k] += g * params.context[[target, k]];
                        params.context[[target, k]] -= lr * g * params.embeddings[[center, k]];
                    }
                }
                for k in 0..d {
                    params.embeddings[[center, k]] -= lr * center_grad[k];
                }
            }
            Example::Node { row, target } => {
                let mut pred = params.readout_bias;
                for k in 0..d {
                    pred += params.readout_weights[k] * params.embeddings[[row, k]];
                }
                let s = weights.node * 2.0 * (pred - target);
                for k in 0..d {
                    let e = params.embeddings[[row, k]];
                    let w = params.readout_weights[k];
                    params.embeddings[[row, k]] -= lr * s * w;
                    params.readout_weights[k] -= lr * s * e;
                }
                params.readout_bias -= lr * s;
            }
            Example::Edge { src, dst, weight } => {
                let mut dot = 0.0;
                for k in 0..d {
                    dot += params.embeddings[[src, k]] * params.embeddings[[dst, k]];
                }
                let s = weights.edge * 2.0 * (dot - weight);
                for k in 0..d {
                    let vi = params.embeddings[[src, k]];
                    let vj = params.embeddings[[dst, k]];
                    params.embeddings[[src, k]] -= lr * s * vj;
                    params.embeddings[[dst, k]] -= lr * s * vi;
                }
            }
        }
    }
}

fn average_params(mut copies: Vec<ModelParams>) -> ModelParams {
    let n = copies.len() as f64;
    let mut acc = copies.remove(0);
    for p in &copies {
        acc.embeddings += &p.embeddings;
        acc.context += &p.context;
        acc.readout_weights += &p.readout_weights;
        acc.readout_bias += p.readout_bias;
    }
    acc.embeddings /= n;
    acc.context /= n;
    acc.readout_weights /= n;
    acc.readout_bias /= n;
    acc
}

/// Trains one embedding matrix per snapshot under the composite objective.
///
/// `node_targets` supplies the per-snapshot real-valued node attribute the
/// linear readout regresses on (required when `lambda_node > 0`);
/// `use_edge_weights` turns on the dot-product-vs-weight edge term
/// (required when `lambda_edge > 0`).
pub fn train_series(
    graph: &DynamicGraph,
    cfg: &TrainingConfig,
    node_targets: Option<&[BTreeMap<usize, f64>]>,
    use_edge_weights: bool,
) -> Result<EmbeddingSeries> {
    cfg.validate()?;
    graph.check_invariants()?;
    if cfg.lambda_node > 0.0 && node_targets.is_none() {
        return Err(Error::validation(
            "lambda_node > 0 but no node targets were provided",
        ));
    }
    if cfg.lambda_edge > 0.0 && !use_edge_weights {
        return Err(Error::validation(
            "lambda_edge > 0 but edge-weight targets are not enabled",
        ));
    }
    if let Some(targets) = node_targets {
        if targets.len() != graph.num_timestamps() {
            return Err(Error::validation(format!(
                "{} node-target maps for {} snapshots",
                targets.len(),
                graph.num_timestamps()
            )));
        }
    }

    let d = cfg.dim;
    let weights = LossWeights {
        link: cfg.lambda_link,
        node: cfg.lambda_node,
        edge: cfg.lambda_edge,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid std");

    let mut warm_emb: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut warm_ctx: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut warm_readout: Option<(Array1<f64>, f64)> = None;
    let mut matrices = Vec::with_capacity(graph.num_timestamps());

    for (t, snap) in graph.snapshots.iter().enumerate() {
        let ids: Vec<usize> = snap.node_mask.iter().copied().collect();
        let n = ids.len();
        let row_of: HashMap<usize, usize> =
            ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();

        let mut embeddings = Array2::zeros((n, d));
        let mut context = Array2::zeros((n, d));
        for (row, &id) in ids.iter().enumerate() {
            match (warm_emb.get(&id), warm_ctx.get(&id)) {
                (Some(e), Some(c)) => {
                    for k in 0..d {
                        embeddings[[row, k]] = e[k];
                        context[[row, k]] = c[k];
                    }
                }
                _ => {
                    for k in 0..d {
                        embeddings[[row, k]] = normal.sample(&mut rng);
                    }
                    for k in 0..d {
                        context[[row, k]] = normal.sample(&mut rng);
                    }
                }
            }
        }
        let (readout_weights, readout_bias) = match &warm_readout {
            Some((w, b)) => (w.clone(), *b),
            None => (Array1::zeros(d), 0.0),
        };
        let mut params = ModelParams { embeddings, context, readout_weights, readout_bias };

        if cfg.epochs > 0 && n > 0 {
            let edges: Vec<(usize, usize, f64)> = snap
                .edges
                .iter()
                .map(|e| (row_of[&e.src], row_of[&e.dst], e.weight))
                .collect();
            let node_examples: Vec<Example> = match node_targets {
                Some(targets) if cfg.lambda_node > 0.0 => targets[t]
                    .iter()
                    .filter_map(|(&id, &target)| {
                        row_of.get(&id).map(|&row| Example::Node { row, target })
                    })
                    .collect(),
                _ => Vec::new(),
            };
            let edge_examples: Vec<Example> = if use_edge_weights && cfg.lambda_edge > 0.0 {
                edges
                    .iter()
                    .map(|&(src, dst, weight)| Example::Edge { src, dst, weight })
                    .collect()
            } else {
                Vec::new()
            };
            let mut problem = build_problem(
                n,
                &edges,
                graph.directed,
                cfg,
                node_examples,
                edge_examples,
                &mut rng,
            );
            let total_steps = problem.examples.len() * cfg.epochs;
            for epoch in 0..cfg.epochs {
                problem.examples.shuffle(&mut rng);
                let step_offset = epoch * problem.examples.len();
                if cfg.threads <= 1 {
                    sgd_pass(
                        &mut params,
                        &problem.examples,
                        &problem.negatives,
                        &weights,
                        cfg,
                        &mut rng,
                        step_offset,
                        total_steps,
                    );
                } else {
                    // Sharded model averaging: each shard trains a copy.
                    // Shard boundaries and seeds depend only on the config,
                    // so results are reproducible for a fixed thread count.
                    let shards = cfg.threads.min(problem.examples.len().max(1));
                    let chunk = problem.examples.len().div_ceil(shards);
                    let seeds: Vec<u64> = (0..shards).map(|_| rng.random()).collect();
                    let copies: Vec<ModelParams> = problem
                        .examples
                        .chunks(chunk)
                        .enumerate()
                        .collect::<Vec<_>>()
                        .into_par_iter()
                        .map(|(s, shard)| {
                            let mut local = params.clone();
                            let mut shard_rng = ChaCha8Rng::seed_from_u64(seeds[s]);
                            sgd_pass(
                                &mut local,
                                shard,
                                &problem.negatives,
                                &weights,
                                cfg,
                                &mut shard_rng,
                                step_offset + s * chunk,
                                total_steps,
                            );
                            local
                        })
                        .collect();
                    params = average_params(copies);
                }
            }
        }

        if params.embeddings.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(
                "train_series",
                format!("non-finite embedding after training snapshot {t}"),
            ));
        }

        warm_emb = ids
            .iter()
            .enumerate()
            .map(|(row, &id)| (id, params.embeddings.row(row).to_vec()))
            .collect();
        warm_ctx = ids
            .iter()
            .enumerate()
            .map(|(row, &id)| (id, params.context.row(row).to_vec()))
            .collect();
        warm_readout = Some((params.readout_weights.clone(), params.readout_bias));

        matrices.push(EmbeddingMatrix::new(
            t,
            snap.timestamp_label.clone(),
            ids,
            params.embeddings,
        )?);
    }

    EmbeddingSeries::new(matrices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn two_cliques_separate_in_embedding_space() {
        let g = synthetic::two_cliques(4);
        let cfg = TrainingConfig {
            dim: 8,
            epochs: 40,
            lambda_link: 1.0,
            lambda_node: 0.0,
            lambda_edge: 0.0,
            ..TrainingConfig::default()
        };
        let series = train_series(&g, &cfg, None, false).unwrap();
        let m = series.matrix(0).unwrap();
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for i in 0..8 {
            for j in (i + 1)..8 {
                let vi = m.vector(i).unwrap().to_vec();
                let vj = m.vector(j).unwrap().to_vec();
                let s = cosine(&vi, &vj);
                if (i < 4) == (j < 4) {
                    intra.push(s);
                } else {
                    inter.push(s);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&intra) > mean(&inter),
            "intra {} should exceed inter {}",
            mean(&intra),
            mean(&inter)
        );
    }

    #[test]
    fn joint_objective_with_node_and_edge_targets_runs() {
        // the weighted-graph + attribute-regression configuration
        let g = synthetic::two_cliques(4);
        let targets: Vec<BTreeMap<usize, f64>> =
            vec![(0..8).map(|id| (id, if id < 4 { 1.0 } else { -1.0 })).collect()];
        let cfg = TrainingConfig {
            dim: 8,
            epochs: 5,
            lambda_link: 0.1,
            lambda_node: 0.1,
            lambda_edge: 0.0,
            ..TrainingConfig::default()
        };
        let series = train_series(&g, &cfg, Some(&targets), false).unwrap();
        assert_eq!(series.len(), 1);
        assert!(series.matrix(0).unwrap().rows.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn missing_targets_with_positive_lambda_is_an_error() {
        let g = synthetic::two_cliques(3);
        let cfg = TrainingConfig { lambda_node: 0.5, ..TrainingConfig::default() };
        assert!(train_series(&g, &cfg, None, false).is_err());
        let cfg = TrainingConfig { lambda_edge: 0.5, ..TrainingConfig::default() };
        assert!(train_series(&g, &cfg, None, false).is_err());
    }

    #[test]
    fn zero_epochs_is_deterministic_and_warm_start_exact() {
        let g = synthetic::drifting_clusters(12, 3, 7);
        let cfg = TrainingConfig { dim: 4, epochs: 0, ..TrainingConfig::default() };
        let a = train_series(&g, &cfg, None, false).unwrap();
        let b = train_series(&g, &cfg, None, false).unwrap();
        for t in 0..a.len() {
            let (ma, mb) = (a.matrix(t).unwrap(), b.matrix(t).unwrap());
            assert_eq!(ma.rows, mb.rows);
        }
        // with no updates, every surviving node keeps its previous row
        for t in 1..a.len() {
            let prev = a.matrix(t - 1).unwrap();
            let curr = a.matrix(t).unwrap();
            for &id in curr.ids() {
                if let (Some(p), Some(c)) = (prev.vector(id), curr.vector(id)) {
                    assert_eq!(p.to_vec(), c.to_vec(), "node {id} moved at t={t}");
                }
            }
        }
    }

    #[test]
    fn same_seed_single_thread_is_bit_identical() {
        let g = synthetic::drifting_clusters(10, 2, 3);
        let cfg = TrainingConfig {
            dim: 4,
            epochs: 2,
            walks_per_node: 2,
            walk_length: 5,
            ..TrainingConfig::default()
        };
        let a = train_series(&g, &cfg, None, false).unwrap();
        let b = train_series(&g, &cfg, None, false).unwrap();
        for t in 0..a.len() {
            let (ma, mb) = (a.matrix(t).unwrap(), b.matrix(t).unwrap());
            assert_eq!(ma.rows.shape(), mb.rows.shape());
            for (x, y) in ma.rows.iter().zip(mb.rows.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
