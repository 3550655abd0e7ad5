//! Full-batch semi-supervised training loop.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{backward, forward_cached, masked_bce_loss, AdamState, GcnParams};
use crate::graph::VoxelGraph;

/// Training hyperparameters. Defaults follow the refinement protocol:
/// 200 epochs at learning rate 1e-2 with standard Adam moments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub init_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-2,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            init_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        let lr_ok = self.learning_rate.is_finite() && self.learning_rate > 0.0;
        if !lr_ok {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Final parameters plus the per-epoch loss curve (loss measured before each
/// update, so `loss_curve[0]` is the loss at initialization).
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GcnParams,
    pub loss_curve: Vec<f64>,
}

/// Trains the GCN on the labeled nodes of `graph` with full-batch Adam.
/// Deterministic for a fixed graph and seed.
pub fn train(graph: &VoxelGraph, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if graph.labeled_count() == 0 {
        return Err(Error::NoLabeledNodes);
    }
    let labels = graph.labels();
    let mut params = GcnParams::init(config.init_seed);
    let mut adam = AdamState::new();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let cache = forward_cached(graph, &params);
        let loss = masked_bce_loss(&cache.probs, &labels)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss_curve.push(loss);
        let grads = backward(graph, &params, &cache, &labels);
        adam.update(
            &mut params,
            &grads,
            config.learning_rate,
            config.adam_beta1,
            config.adam_beta2,
            config.adam_eps,
        );
    }
    Ok(TrainOutcome { params, loss_curve })
}

/// Writes the loss curve as CSV rows `epoch,loss`.
pub fn write_loss_csv(loss_curve: &[f64], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = String::from("epoch,loss\n");
    for (epoch, loss) in loss_curve.iter().enumerate() {
        out.push_str(&format!("{epoch},{loss}\n"));
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(out.as_bytes()).map_err(io_err)
}
