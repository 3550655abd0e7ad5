//! Refinement of binary volumetric organ segmentations from any stochastic
//! (dropout-equipped) predictor.
//!
//! Given an intensity volume, a predicted mask, and a stack of stochastic
//! prediction passes, the pipeline:
//!
//! 1. aggregates the passes into expectation and entropy maps
//!    ([`uncertainty`]),
//! 2. gates a sparse voxel graph on the entropy: confident voxels become
//!    labeled nodes, uncertain ones unlabeled ([`graph`]),
//! 3. trains a small two-layer graph convolutional network on the labeled
//!    nodes ([`gcn`]), and
//! 4. replaces the prediction inside the region of interest with the
//!    network's output ([`pipeline`]).
//!
//! Everything is deterministic for fixed seeds; volumes use a simple
//! JSON-header + raw-f32 on-disk format ([`volume::io`]).

pub mod error;
pub mod gcn;
pub mod graph;
pub mod pipeline;
pub mod uncertainty;
pub mod volume;

pub use error::{Error, Result};
pub use gcn::{GcnParams, TrainConfig};
pub use graph::{NodeLabel, NodeRecord, VoxelGraph};
pub use pipeline::{
    refine, refine_full, relative_improvement, sweep_tau, synth_phantom, Phantom, PhantomParams,
    RefineConfig, RefineReport, RefineRun, ReplacePolicy,
};
pub use uncertainty::UncertaintyMaps;
pub use volume::{PassStack, Volume3, VolumeKind};
