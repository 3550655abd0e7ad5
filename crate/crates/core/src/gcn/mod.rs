//! Two-layer graph convolutional network for semi-supervised node
//! classification: ReLU hidden layer of 32 units, single sigmoid output
//! neuron, masked binary cross-entropy on the labeled nodes, and exact
//! analytic gradients.
//!
//! Both layers propagate through the symmetric-normalized adjacency
//! `Â = D̃^{-1/2}(A + I)D̃^{-1/2}`:
//!
//! ```text
//! H1 = relu(Â · X · W1 + b1)
//! p  = sigmoid(Â · H1 · W2 + b2)
//! ```

mod adam;
mod checkpoint;
mod train;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use train::{train, write_loss_csv, TrainConfig, TrainOutcome};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeLabel, VoxelGraph};

/// Node feature count: standardized intensity, expectation, entropy.
pub const IN_FEATURES: usize = 3;
/// Hidden layer width.
pub const HIDDEN_UNITS: usize = 32;

/// Predictions are clamped to `[CLAMP, 1 - CLAMP]` inside the loss.
const BCE_CLAMP: f64 = 1e-7;

/// Weights and biases of the two layers. `w1` is row-major
/// `IN_FEATURES x HIDDEN_UNITS`, `w2` is `HIDDEN_UNITS x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl GcnParams {
    /// Glorot-uniform weights from a seeded generator, zero biases.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut glorot = |fan_in: usize, fan_out: usize, len: usize| -> Vec<f64> {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..len)
                .map(|_| (2.0 * rng.random::<f64>() - 1.0) * bound)
                .collect()
        };
        let w1 = glorot(IN_FEATURES, HIDDEN_UNITS, IN_FEATURES * HIDDEN_UNITS);
        let w2 = glorot(HIDDEN_UNITS, 1, HIDDEN_UNITS);
        Self {
            w1,
            b1: vec![0.0; HIDDEN_UNITS],
            w2,
            b2: 0.0,
        }
    }

    pub fn zeros() -> Self {
        Self {
            w1: vec![0.0; IN_FEATURES * HIDDEN_UNITS],
            b1: vec![0.0; HIDDEN_UNITS],
            w2: vec![0.0; HIDDEN_UNITS],
            b2: 0.0,
        }
    }
}

/// Parameter-shaped gradient container.
pub type Gradients = GcnParams;

/// Intermediate activations kept for the backward pass.
pub struct ForwardCache {
    /// Row-major `n x IN_FEATURES` feature matrix.
    pub features: Vec<f64>,
    /// Hidden activations after ReLU, `n x HIDDEN_UNITS`.
    pub hidden: Vec<f64>,
    /// Output probabilities, length `n`.
    pub probs: Vec<f64>,
}

/// Row-major feature matrix of the graph nodes.
pub fn feature_matrix(graph: &VoxelGraph) -> Vec<f64> {
    let mut x = Vec::with_capacity(graph.node_count() * IN_FEATURES);
    for node in &graph.nodes {
        debug_assert!(
            node.intensity.is_finite() && node.expectation.is_finite() && node.entropy.is_finite(),
            "non-finite node feature"
        );
        x.push(node.intensity);
        x.push(node.expectation);
        x.push(node.entropy);
    }
    x
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Dense row-major product `(n x m) · (m x p)`.
fn dense_mul(a: &[f64], n: usize, m: usize, b: &[f64], p: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * m);
    debug_assert_eq!(b.len(), m * p);
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        for l in 0..m {
            let av = a[i * m + l];
            if av == 0.0 {
                continue;
            }
            let brow = &b[l * p..(l + 1) * p];
            let orow = &mut out[i * p..(i + 1) * p];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// Forward pass keeping the activations needed by [`backward`].
pub fn forward_cached(graph: &VoxelGraph, params: &GcnParams) -> ForwardCache {
    let n = graph.node_count();
    let features = feature_matrix(graph);

    let xw = dense_mul(&features, n, IN_FEATURES, &params.w1, HIDDEN_UNITS);
    let mut hidden = vec![0.0; n * HIDDEN_UNITS];
    graph.norm_adj.mul_dense(&xw, HIDDEN_UNITS, &mut hidden);
    for row in hidden.chunks_exact_mut(HIDDEN_UNITS) {
        for (h, &b) in row.iter_mut().zip(&params.b1) {
            *h = (*h + b).max(0.0);
        }
    }

    let scores: Vec<f64> = hidden
        .chunks_exact(HIDDEN_UNITS)
        .map(|row| row.iter().zip(&params.w2).map(|(&h, &w)| h * w).sum())
        .collect();
    let mut logits = vec![0.0; n];
    graph.norm_adj.mul_dense(&scores, 1, &mut logits);
    let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z + params.b2)).collect();

    ForwardCache {
        features,
        hidden,
        probs,
    }
}

/// Per-node foreground probabilities.
pub fn forward(graph: &VoxelGraph, params: &GcnParams) -> Vec<f64> {
    forward_cached(graph, params).probs
}

/// Mean binary cross-entropy over the labeled nodes (natural log,
/// predictions clamped to `[1e-7, 1 - 1e-7]`).
pub fn masked_bce_loss(probs: &[f64], labels: &[NodeLabel]) -> Result<f64> {
    debug_assert_eq!(probs.len(), labels.len());
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&p, label) in probs.iter().zip(labels) {
        if let Some(y) = label.target() {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            sum -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoLabeledNodes);
    }
    Ok(sum / count as f64)
}

/// Exact gradients of [`masked_bce_loss`] composed with [`forward`] with
/// respect to every parameter. Unlabeled nodes contribute nothing.
pub fn backward(
    graph: &VoxelGraph,
    params: &GcnParams,
    cache: &ForwardCache,
    labels: &[NodeLabel],
) -> Gradients {
    let n = graph.node_count();
    let labeled = labels.iter().filter(|l| l.target().is_some()).count();
    assert!(labeled > 0, "backward requires at least one labeled node");
    let scale = 1.0 / labeled as f64;

    // dL/dz2: the clamp in the loss only guards the reported value; the
    // gradient of sigmoid-composed BCE is the residual itself.
    let mut g_logits = vec![0.0; n];
    for i in 0..n {
        if let Some(y) = labels[i].target() {
            g_logits[i] = (cache.probs[i] - y) * scale;
        }
    }

    let grad_b2 = g_logits.iter().sum();

    // z2 = Â (H1 w2) + b2, so the score gradient propagates through Â once.
    let mut g_scores = vec![0.0; n];
    graph.norm_adj.mul_dense(&g_logits, 1, &mut g_scores);

    let mut grad_w2 = vec![0.0; HIDDEN_UNITS];
    for (row, &g) in cache.hidden.chunks_exact(HIDDEN_UNITS).zip(&g_scores) {
        if g == 0.0 {
            continue;
        }
        for (gw, &h) in grad_w2.iter_mut().zip(row) {
            *gw += h * g;
        }
    }

    // dL/dZ1 = (g_scores ⊗ w2) ⊙ relu'(Z1), with relu' read off the
    // activations themselves.
    let mut g_z1 = vec![0.0; n * HIDDEN_UNITS];
    for i in 0..n {
        let g = g_scores[i];
        if g == 0.0 {
            continue;
        }
        let hrow = &cache.hidden[i * HIDDEN_UNITS..(i + 1) * HIDDEN_UNITS];
        let grow = &mut g_z1[i * HIDDEN_UNITS..(i + 1) * HIDDEN_UNITS];
        for ((gz, &h), &w) in grow.iter_mut().zip(hrow).zip(&params.w2) {
            if h > 0.0 {
                *gz = g * w;
            }
        }
    }

    let mut grad_b1 = vec![0.0; HIDDEN_UNITS];
    for row in g_z1.chunks_exact(HIDDEN_UNITS) {
        for (gb, &g) in grad_b1.iter_mut().zip(row) {
            *gb += g;
        }
    }

    // Z1 = Â (X W1) + b1: propagate through Â, then contract with X.
    let mut g_xw = vec![0.0; n * HIDDEN_UNITS];
    graph.norm_adj.mul_dense(&g_z1, HIDDEN_UNITS, &mut g_xw);
    let mut grad_w1 = vec![0.0; IN_FEATURES * HIDDEN_UNITS];
    for i in 0..n {
        let xrow = &cache.features[i * IN_FEATURES..(i + 1) * IN_FEATURES];
        let grow = &g_xw[i * HIDDEN_UNITS..(i + 1) * HIDDEN_UNITS];
        for (f, &xv) in xrow.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wrow = &mut grad_w1[f * HIDDEN_UNITS..(f + 1) * HIDDEN_UNITS];
            for (gw, &g) in wrow.iter_mut().zip(grow) {
                *gw += xv * g;
            }
        }
    }

    Gradients {
        w1: grad_w1,
        b1: grad_b1,
        w2: grad_w2,
        b2: grad_b2,
    }
}

/// Binary node labels: foreground iff the predicted probability strictly
/// exceeds `cut`.
pub fn predict(graph: &VoxelGraph, params: &GcnParams, cut: f64) -> Vec<bool> {
    forward(graph, params).iter().map(|&p| p > cut).collect()
}
