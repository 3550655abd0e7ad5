//! Construction of the partially-labeled sparse voxel graph: region of
//! interest, node features and labels, local plus random long-range edges,
//! Gaussian/diversity edge weights, and the normalized adjacency the GCN
//! propagates through.

mod csr;
mod dump;

pub use csr::CsrMatrix;

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::volume::{dilate, Volume3, VolumeKind};

/// Probabilities are clamped to `[CLAMP, 1 - CLAMP]` before the diversity
/// logarithms.
const DIVERSITY_CLAMP: f64 = 1e-6;

/// Node class assignment derived from the prediction and uncertainty mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLabel {
    Background,
    Foreground,
    Unlabeled,
}

impl NodeLabel {
    /// Training target for labeled nodes, `None` for unlabeled ones.
    pub fn target(self) -> Option<f64> {
        match self {
            NodeLabel::Background => Some(0.0),
            NodeLabel::Foreground => Some(1.0),
            NodeLabel::Unlabeled => None,
        }
    }
}

/// One graph node: its voxel, its feature vector (standardized intensity,
/// expectation, entropy), and its label.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub voxel: (usize, usize, usize),
    /// Intensity z-scored over the ROI (see [`build_nodes`]).
    pub intensity: f64,
    pub expectation: f64,
    pub entropy: f64,
    pub label: NodeLabel,
}

/// Edge construction and weighting parameters.
#[derive(Debug, Clone)]
pub struct EdgeParams {
    /// Random long-range connections added per node.
    pub k: usize,
    pub seed: u64,
    /// Balance factor on the diversity term.
    pub lambda: f64,
    /// Intensity kernel width (on standardized intensities).
    pub sigma1: f64,
    /// Spatial kernel width (squared voxel units).
    pub sigma2: f64,
}

impl EdgeParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |s: f64| s.is_finite() && s > 0.0;
        if !positive(self.sigma1) || !positive(self.sigma2) {
            return Err(Error::InvalidConfig(format!(
                "sigma1 and sigma2 must be positive, got {} and {}",
                self.sigma1, self.sigma2
            )));
        }
        Ok(())
    }
}

/// Sparse weighted undirected graph over the ROI voxels.
#[derive(Debug, Clone)]
pub struct VoxelGraph {
    pub nodes: Vec<NodeRecord>,
    /// Weighted adjacency without self-loops.
    pub csr: CsrMatrix,
    /// `D̃^{-1/2} (A + I) D̃^{-1/2}`, the propagation matrix.
    pub norm_adj: CsrMatrix,
    pub voxel_to_node: HashMap<(usize, usize, usize), usize>,
}

impl VoxelGraph {
    /// Assembles the graph from prepared nodes: edges, weights, CSR, and the
    /// normalized adjacency.
    pub fn build(nodes: Vec<NodeRecord>, roi: &Volume3, params: &EdgeParams) -> Result<Self> {
        params.validate()?;
        let edges = build_edges(&nodes, roi, params.k, params.seed);
        let weighted: Vec<(usize, usize, f64)> = edges
            .iter()
            .map(|&(i, j)| {
                (
                    i,
                    j,
                    edge_weight(
                        &nodes[i],
                        &nodes[j],
                        params.lambda,
                        params.sigma1,
                        params.sigma2,
                    ),
                )
            })
            .collect();
        let csr = CsrMatrix::from_symmetric_edges(nodes.len(), &weighted);
        let norm_adj = csr.normalize_adjacency();
        let voxel_to_node = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.voxel, i))
            .collect();
        Ok(Self {
            nodes,
            csr,
            norm_adj,
            voxel_to_node,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn labeled_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.label != NodeLabel::Unlabeled)
            .count()
    }

    pub fn unlabeled_count(&self) -> usize {
        self.nodes.len() - self.labeled_count()
    }

    pub fn labels(&self) -> Vec<NodeLabel> {
        self.nodes.iter().map(|n| n.label).collect()
    }
}

/// Region of interest: the dilated uncertain mask united with the
/// expectation binarized at 0.5.
pub fn build_roi(
    uncertain: &Volume3,
    expectation: &Volume3,
    dilation_radius: usize,
) -> Result<Volume3> {
    assert_eq!(
        uncertain.kind(),
        VolumeKind::Mask,
        "uncertain must be a mask"
    );
    uncertain.check_same_geometry(expectation, "ROI inputs")?;
    let dilated = dilate(uncertain, dilation_radius);
    let expectation_fg = expectation.threshold(0.5);
    let bits: Vec<bool> = dilated
        .data()
        .iter()
        .zip(expectation_fg.data())
        .map(|(&a, &b)| a != 0.0 || b != 0.0)
        .collect();
    Ok(Volume3::mask_from_bits(
        uncertain.dims(),
        uncertain.spacing(),
        &bits,
    ))
}

/// One node per ROI voxel in flat scan order (x fastest, then y, then z).
///
/// The intensity feature is z-scored with mean and standard deviation taken
/// over the ROI voxels only; a constant-intensity ROI falls back to a unit
/// divisor. Labels follow the uncertainty rule: confident voxels inherit the
/// prediction, uncertain voxels are unlabeled.
pub fn build_nodes(
    roi: &Volume3,
    intensity: &Volume3,
    expectation: &Volume3,
    entropy: &Volume3,
    prediction: &Volume3,
    uncertain: &Volume3,
) -> Result<Vec<NodeRecord>> {
    assert_eq!(roi.kind(), VolumeKind::Mask, "roi must be a mask");
    assert_eq!(
        prediction.kind(),
        VolumeKind::Mask,
        "prediction must be a mask"
    );
    assert_eq!(
        uncertain.kind(),
        VolumeKind::Mask,
        "uncertain must be a mask"
    );
    for (v, what) in [
        (intensity, "intensity"),
        (expectation, "expectation"),
        (entropy, "entropy"),
        (prediction, "prediction"),
        (uncertain, "uncertain mask"),
    ] {
        roi.check_same_geometry(v, what)?;
    }

    let voxels: Vec<usize> = (0..roi.voxel_count())
        .filter(|&i| roi.is_foreground(i))
        .collect();
    if voxels.is_empty() {
        return Err(Error::EmptyRoi);
    }

    let n = voxels.len() as f64;
    let mean = voxels.iter().map(|&i| intensity.value(i)).sum::<f64>() / n;
    let var = voxels
        .iter()
        .map(|&i| {
            let d = intensity.value(i) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };

    let mut nodes = Vec::with_capacity(voxels.len());
    let mut foreground = 0usize;
    let mut background = 0usize;
    for &i in &voxels {
        let label = if uncertain.is_foreground(i) {
            NodeLabel::Unlabeled
        } else if prediction.is_foreground(i) {
            foreground += 1;
            NodeLabel::Foreground
        } else {
            background += 1;
            NodeLabel::Background
        };
        nodes.push(NodeRecord {
            voxel: roi.coords(i),
            intensity: (intensity.value(i) - mean) / std,
            expectation: expectation.value(i),
            entropy: entropy.value(i),
            label,
        });
    }
    if foreground + background == 0 {
        return Err(Error::NoLabeledNodes);
    }
    if foreground == 0 || background == 0 {
        log::warn!(
            "labeled nodes are single-class ({foreground} foreground, {background} background); training proceeds"
        );
    }
    Ok(nodes)
}

/// In-bounds face neighbors of a voxel.
fn face_neighbors(
    (x, y, z): (usize, usize, usize),
    (nx, ny, nz): (usize, usize, usize),
) -> impl Iterator<Item = (usize, usize, usize)> {
    let mut out = Vec::with_capacity(6);
    if x > 0 {
        out.push((x - 1, y, z));
    }
    if x + 1 < nx {
        out.push((x + 1, y, z));
    }
    if y > 0 {
        out.push((x, y - 1, z));
    }
    if y + 1 < ny {
        out.push((x, y + 1, z));
    }
    if z > 0 {
        out.push((x, y, z - 1));
    }
    if z + 1 < nz {
        out.push((x, y, z + 1));
    }
    out.into_iter()
}

/// Undirected edge list: face-adjacency within the ROI plus `k` random
/// long-range connections per node.
///
/// The random connections for node `i` are drawn uniformly without
/// replacement from all nodes excluding `i` and its current neighbors, from
/// one seeded generator consumed in node-index order. When the eligible set
/// is small (at most twice the draw count) the draw is a partial
/// Fisher-Yates over the explicit ascending candidate list; otherwise it is
/// rejection sampling. Duplicate undirected pairs cannot arise because the
/// current adjacency is excluded.
pub fn build_edges(
    nodes: &[NodeRecord],
    roi: &Volume3,
    k: usize,
    seed: u64,
) -> Vec<(usize, usize)> {
    let n = nodes.len();
    let mut voxel_to_node: HashMap<(usize, usize, usize), usize> = HashMap::with_capacity(n);
    for (i, node) in nodes.iter().enumerate() {
        voxel_to_node.insert(node.voxel, i);
    }

    let mut adjacency: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        for nb in face_neighbors(node.voxel, roi.dims()) {
            if let Some(&j) = voxel_to_node.get(&nb) {
                if j > i {
                    adjacency[i].insert(j);
                    adjacency[j].insert(i);
                    edges.push((i, j));
                }
            }
        }
    }

    let k_eff = if n == 0 {
        return edges;
    } else if k >= n {
        log::warn!("k = {k} >= node count {n}; clamping to {}", n - 1);
        n - 1
    } else {
        k
    };
    if k_eff == 0 {
        return edges;
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for i in 0..n {
        let eligible = n - 1 - adjacency[i].len();
        let want = k_eff.min(eligible);
        if want == 0 {
            continue;
        }
        let picked: Vec<usize> = if eligible <= 2 * want {
            let mut candidates: Vec<usize> = (0..n)
                .filter(|&j| j != i && !adjacency[i].contains(&j))
                .collect();
            for t in 0..want {
                let r = rng.random_range(t..candidates.len());
                candidates.swap(t, r);
            }
            candidates.truncate(want);
            candidates
        } else {
            let mut picked = Vec::with_capacity(want);
            while picked.len() < want {
                let j = rng.random_range(0..n);
                if j == i || adjacency[i].contains(&j) || picked.contains(&j) {
                    continue;
                }
                picked.push(j);
            }
            picked
        };
        for j in picked {
            adjacency[i].insert(j);
            adjacency[j].insert(i);
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges
}

/// Symmetric divergence between the binary class distributions `(p, 1-p)`
/// and `(q, 1-q)`, in bits. Inputs are clamped away from 0 and 1; the result
/// is nonnegative and zero exactly when the clamped inputs coincide.
pub fn diversity(p_i: f64, p_j: f64) -> f64 {
    let p = p_i.clamp(DIVERSITY_CLAMP, 1.0 - DIVERSITY_CLAMP);
    let q = p_j.clamp(DIVERSITY_CLAMP, 1.0 - DIVERSITY_CLAMP);
    // (p-q)*log2(p/q) + ((1-p)-(1-q))*log2((1-p)/(1-q)), factored so that
    // swapping the arguments flips the sign of both factors and the product
    // is bit-identical.
    let s = p - q;
    let t = (p.log2() - q.log2()) - ((1.0 - p).log2() - (1.0 - q).log2());
    s * t
}

/// Edge weight: diversity of the expectations plus Gaussian kernels on the
/// (standardized) intensity difference and the squared voxel distance.
pub fn edge_weight(a: &NodeRecord, b: &NodeRecord, lambda: f64, sigma1: f64, sigma2: f64) -> f64 {
    assert!(
        sigma1 > 0.0 && sigma2 > 0.0,
        "sigma1 and sigma2 must be positive"
    );
    let dv = a.intensity - b.intensity;
    let dx = a.voxel.0 as f64 - b.voxel.0 as f64;
    let dy = a.voxel.1 as f64 - b.voxel.1 as f64;
    let dz = a.voxel.2 as f64 - b.voxel.2 as f64;
    let dist2 = dx * dx + dy * dy + dz * dz;
    lambda * diversity(a.expectation, b.expectation)
        + (-(dv * dv) / (2.0 * sigma1)).exp()
        + (-dist2 / (2.0 * sigma2)).exp()
}
