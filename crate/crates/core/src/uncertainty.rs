//! Aggregation of stochastic prediction passes into expectation and entropy
//! maps, and the binary uncertainty mask derived from them.
//!
//! The expectation is the voxelwise mean of the `T` passes and doubles as
//! the foreground-probability estimate. Model uncertainty is the base-2
//! binary entropy of that estimate, so it spans the full `[0, 1]` range;
//! voxels whose entropy exceeds the threshold `tau` form the uncertain mask.

use crate::error::{Error, Result};
use crate::volume::{PassStack, Volume3, VolumeKind};

/// Voxelwise mean of the stochastic passes.
///
/// The per-voxel samples are sorted before summation so the result is
/// bit-identical under any permutation of the pass order.
pub fn expectation(stack: &PassStack) -> Volume3 {
    let t = stack.len();
    let n = stack.passes()[0].voxel_count();
    let inv_t = 1.0 / t as f64;
    let mut samples = vec![0.0f64; t];
    let mut data = Vec::with_capacity(n);
    for i in 0..n {
        for (s, pass) in samples.iter_mut().zip(stack.passes()) {
            *s = pass.value(i);
        }
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite pass values"));
        let mean = samples.iter().sum::<f64>() * inv_t;
        data.push(mean.clamp(0.0, 1.0));
    }
    Volume3::new(stack.dims(), stack.spacing(), VolumeKind::Probability, data)
        .expect("mean of probabilities is a valid probability volume")
}

/// Binary Shannon entropy in bits: `-p*log2(p) - (1-p)*log2(1-p)`, with the
/// continuous extension `0*log2(0) = 0` at the endpoints.
pub fn binary_entropy(p: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&p),
        "binary_entropy requires p in [0, 1], got {p}"
    );
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    (-p * p.log2() - q * q.log2()).clamp(0.0, 1.0)
}

/// Voxelwise [`binary_entropy`] of a probability volume.
pub fn entropy_map(expectation: &Volume3) -> Result<Volume3> {
    if expectation.kind() != VolumeKind::Probability {
        return Err(Error::Invariant(format!(
            "entropy_map requires a probability volume, got {}",
            expectation.kind()
        )));
    }
    let data: Vec<f64> = expectation
        .data()
        .iter()
        .map(|&p| binary_entropy(p))
        .collect();
    Volume3::new(
        expectation.dims(),
        expectation.spacing(),
        VolumeKind::Entropy,
        data,
    )
}

/// Voxels whose entropy strictly exceeds `tau`.
pub fn uncertain_mask(entropy: &Volume3, tau: f64) -> Volume3 {
    entropy.threshold(tau)
}

/// Expectation, entropy, and uncertain mask of one pass stack, bundled with
/// the threshold that produced the mask.
#[derive(Debug, Clone)]
pub struct UncertaintyMaps {
    pub expectation: Volume3,
    pub entropy: Volume3,
    pub uncertain_mask: Volume3,
    pub tau: f64,
}

impl UncertaintyMaps {
    pub fn compute(stack: &PassStack, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tau must lie in (0, 1), got {tau}"
            )));
        }
        let expectation = expectation(stack);
        let entropy = entropy_map(&expectation)?;
        let uncertain_mask = uncertain_mask(&entropy, tau);
        Ok(Self {
            expectation,
            entropy,
            uncertain_mask,
            tau,
        })
    }
}
