//! The shallow lookup-table embedding model and its composite objective.
//!
//! Three weighted terms: a skip-gram negative-sampling link objective on
//! (center, context) pairs, a squared-error linear readout against a node
//! attribute, and a squared error of embedding dot products against edge
//! weights. `loss_and_grad` returns the exact analytic gradient of the
//! minibatch loss; the SGD trainer applies the same per-example factors.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Numerically stable logistic function.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `softplus(x) = ln(1 + e^x)`, stable for large |x|.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Loss of one (center, target) interaction with `label` 1.0 for the
/// observed context and 0.0 for negatives: `-ln σ(f)` resp. `-ln σ(-f)`.
pub(crate) fn link_pair_loss(dot: f64, label: f64) -> f64 {
    if label > 0.5 {
        softplus(-dot)
    } else {
        softplus(dot)
    }
}

/// d(loss)/d(dot) of [`link_pair_loss`]: `σ(f) - label`.
pub(crate) fn link_pair_factor(dot: f64, label: f64) -> f64 {
    sigmoid(dot) - label
}

/// Model parameters: "in" embeddings (the published vectors), "out" context
/// embeddings for the link objective, and a linear readout for the node
/// attribute.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub embeddings: Array2<f64>,
    pub context: Array2<f64>,
    pub readout_weights: Array1<f64>,
    pub readout_bias: f64,
}

impl ModelParams {
    pub fn zeros_like(&self) -> ModelGradient {
        ModelGradient {
            embeddings: Array2::zeros(self.embeddings.raw_dim()),
            context: Array2::zeros(self.context.raw_dim()),
            readout_weights: Array1::zeros(self.readout_weights.raw_dim()),
            readout_bias: 0.0,
        }
    }
}

/// Gradient with the same shape as [`ModelParams`].
pub type ModelGradient = ModelParams;

#[derive(Debug, Clone, Copy)]
pub struct LossWeights {
    pub link: f64,
    pub node: f64,
    pub edge: f64,
}

#[derive(Debug, Clone)]
pub struct LinkExample {
    pub center: usize,
    pub context: usize,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct NodeExample {
    pub node: usize,
    pub target: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeExample {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Minibatch {
    pub link: Vec<LinkExample>,
    pub node: Vec<NodeExample>,
    pub edge: Vec<EdgeExample>,
}

/// Exact loss and gradient of
/// `λ_link Σ link + λ_node Σ node + λ_edge Σ edge` over the minibatch.
pub fn loss_and_grad(
    params: &ModelParams,
    batch: &Minibatch,
    weights: &LossWeights,
) -> Result<(f64, ModelGradient)> {
    let d = params.embeddings.ncols();
    let mut grad = params.zeros_like();
    let mut link_loss = 0.0;
    let mut node_loss = 0.0;
    let mut edge_loss = 0.0;

    for ex in &batch.link {
        let center = params.embeddings.row(ex.center);
        for (target, label) in std::iter::once((ex.context, 1.0))
            .chain(ex.negatives.iter().map(|&n| (n, 0.0)))
        {
            let ctx = params.context.row(target);
            let dot = center.dot(&ctx);
            link_loss += link_pair_loss(dot, label);
            let f = link_pair_factor(dot, label);
            for k in 0..d {
                grad.embeddings[[ex.center, k]] += weights.link * f * ctx[k];
                grad.context[[target, k]] += weights.link * f * center[k];
            }
        }
    }

    for ex in &batch.node {
        let v = params.embeddings.row(ex.node);
        let pred = params.readout_weights.dot(&v) + params.readout_bias;
        let err = pred - ex.target;
        node_loss += err * err;
        let s = weights.node * 2.0 * err;
        for k in 0..d {
            grad.embeddings[[ex.node, k]] += s * params.readout_weights[k];
            grad.readout_weights[k] += s * v[k];
        }
        grad.readout_bias += s;
    }

    for ex in &batch.edge {
        let vi = params.embeddings.row(ex.src);
        let vj = params.embeddings.row(ex.dst);
        let err = vi.dot(&vj) - ex.weight;
        edge_loss += err * err;
        let s = weights.edge * 2.0 * err;
        for k in 0..d {
            grad.embeddings[[ex.src, k]] += s * vj[k];
            grad.embeddings[[ex.dst, k]] += s * vi[k];
        }
    }

    for (term, value) in [("link", link_loss), ("node", node_loss), ("edge", edge_loss)] {
        if !value.is_finite() {
            return Err(Error::numeric(
                "loss_and_grad",
                format!("non-finite {term} loss term"),
            ));
        }
    }
    let total = weights.link * link_loss + weights.node * node_loss + weights.edge * edge_loss;
    Ok((total, grad))
}
