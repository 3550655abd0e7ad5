//! Shared fixtures for the benchmarks.

use segrefine_core::graph::{build_nodes, build_roi, EdgeParams, VoxelGraph};
use segrefine_core::pipeline::{synth_phantom, PhantomParams, RefineConfig};
use segrefine_core::uncertainty::UncertaintyMaps;
use segrefine_core::{Phantom, Volume3};

/// Deterministic phantom used by every benchmark.
pub fn bench_phantom(size: usize) -> Phantom {
    synth_phantom(0, (size, size, size), &PhantomParams::default()).expect("phantom")
}

/// Uncertainty maps at the default threshold.
pub fn bench_maps(phantom: &Phantom) -> UncertaintyMaps {
    UncertaintyMaps::compute(&phantom.passes, RefineConfig::default().tau).expect("maps")
}

/// Fully built voxel graph for the phantom at default parameters.
pub fn bench_graph(phantom: &Phantom, maps: &UncertaintyMaps) -> (VoxelGraph, Volume3) {
    let config = RefineConfig::default();
    let roi = build_roi(
        &maps.uncertain_mask,
        &maps.expectation,
        config.dilation_radius,
    )
    .expect("roi");
    let analyzed = segrefine_core::volume::largest_connected_component(&phantom.prediction);
    let nodes = build_nodes(
        &roi,
        &phantom.intensity,
        &maps.expectation,
        &maps.entropy,
        &analyzed,
        &maps.uncertain_mask,
    )
    .expect("nodes");
    let graph = VoxelGraph::build(
        nodes,
        &roi,
        &EdgeParams {
            k: config.k,
            seed: config.edge_seed,
            lambda: config.lambda,
            sigma1: config.sigma1,
            sigma2: config.sigma2,
        },
    )
    .expect("graph");
    (graph, roi)
}
