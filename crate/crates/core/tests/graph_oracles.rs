//! Dense-matrix and replayed-sampler oracles for the graph construction.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use segrefine_core::graph::{
    build_edges, diversity, edge_weight, EdgeParams, NodeLabel, NodeRecord, VoxelGraph,
};
use segrefine_core::volume::Volume3;

const SP: (f64, f64, f64) = (1.0, 1.0, 1.0);

/// Random fully-populated ROI box with random features.
fn random_nodes(rng: &mut ChaCha20Rng, dims: (usize, usize, usize)) -> (Vec<NodeRecord>, Volume3) {
    let n = dims.0 * dims.1 * dims.2;
    let roi = Volume3::mask_from_bits(dims, SP, &vec![true; n]);
    let mut nodes = Vec::with_capacity(n);
    for z in 0..dims.2 {
        for y in 0..dims.1 {
            for x in 0..dims.0 {
                nodes.push(NodeRecord {
                    voxel: (x, y, z),
                    intensity: rng.random::<f64>() * 4.0 - 2.0,
                    expectation: rng.random::<f64>(),
                    entropy: rng.random::<f64>(),
                    label: if rng.random::<f64>() < 0.3 {
                        NodeLabel::Unlabeled
                    } else if rng.random::<f64>() < 0.5 {
                        NodeLabel::Foreground
                    } else {
                        NodeLabel::Background
                    },
                });
            }
        }
    }
    (nodes, roi)
}

/// Replays the documented edge construction: face adjacency, then per node
/// (in index order) `k` distinct random partners from one seeded ChaCha20
/// stream, Fisher-Yates over the ascending candidate list when the eligible
/// set is small (at most twice the draw count), rejection sampling
/// otherwise.
fn replay_edges(
    nodes: &[NodeRecord],
    dims: (usize, usize, usize),
    k: usize,
    seed: u64,
) -> BTreeSet<(usize, usize)> {
    let n = nodes.len();
    let mut index_of = std::collections::HashMap::new();
    for (i, node) in nodes.iter().enumerate() {
        index_of.insert(node.voxel, i);
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, node) in nodes.iter().enumerate() {
        let (x, y, z) = node.voxel;
        let mut neighbors = Vec::new();
        if x > 0 {
            neighbors.push((x - 1, y, z));
        }
        if x + 1 < dims.0 {
            neighbors.push((x + 1, y, z));
        }
        if y > 0 {
            neighbors.push((x, y - 1, z));
        }
        if y + 1 < dims.1 {
            neighbors.push((x, y + 1, z));
        }
        if z > 0 {
            neighbors.push((x, y, z - 1));
        }
        if z + 1 < dims.2 {
            neighbors.push((x, y, z + 1));
        }
        for nb in neighbors {
            if let Some(&j) = index_of.get(&nb) {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let k_eff = if k >= n { n - 1 } else { k };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    if k_eff > 0 {
        for i in 0..n {
            let eligible = n - 1 - adj[i].len();
            let want = k_eff.min(eligible);
            if want == 0 {
                continue;
            }
            let picked: Vec<usize> = if eligible <= 2 * want {
                let mut cand: Vec<usize> =
                    (0..n).filter(|&j| j != i && !adj[i].contains(&j)).collect();
                for t in 0..want {
                    let r = rng.random_range(t..cand.len());
                    cand.swap(t, r);
                }
                cand.truncate(want);
                cand
            } else {
                let mut picked: Vec<usize> = Vec::new();
                while picked.len() < want {
                    let j = rng.random_range(0..n);
                    if j == i || adj[i].contains(&j) || picked.contains(&j) {
                        continue;
                    }
                    picked.push(j);
                }
                picked
            };
            for j in picked {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut edges = BTreeSet::new();
    for (i, set) in adj.iter().enumerate() {
        for &j in set {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    edges
}

/// Independent weight formula: diversity through natural logs, kernels
/// written out directly.
fn oracle_weight(a: &NodeRecord, b: &NodeRecord, lambda: f64, sigma1: f64, sigma2: f64) -> f64 {
    let clamp = |p: f64| p.clamp(1e-6, 1.0 - 1e-6);
    let (p, q) = (clamp(a.expectation), clamp(b.expectation));
    let div = ((p - q) * (p / q).ln() + ((1.0 - p) - (1.0 - q)) * ((1.0 - p) / (1.0 - q)).ln())
        / std::f64::consts::LN_2;
    let dv = a.intensity - b.intensity;
    let dx = a.voxel.0 as f64 - b.voxel.0 as f64;
    let dy = a.voxel.1 as f64 - b.voxel.1 as f64;
    let dz = a.voxel.2 as f64 - b.voxel.2 as f64;
    lambda * div
        + (-(dv * dv) / (2.0 * sigma1)).exp()
        + (-(dx * dx + dy * dy + dz * dz) / (2.0 * sigma2)).exp()
}

#[test]
fn csr_matches_dense_oracle_on_small_graphs() {
    let mut rng = ChaCha20Rng::seed_from_u64(404);
    for (dims, k, seed) in [
        ((4usize, 4usize, 3usize), 5usize, 7u64),
        ((3, 3, 3), 16, 1),
        ((5, 3, 3), 2, 99),
        ((2, 2, 2), 3, 5),
        ((7, 7, 1), 4, 13),
    ] {
        let (nodes, roi) = random_nodes(&mut rng, dims);
        let n = nodes.len();
        assert!(n <= 50);
        let params = EdgeParams {
            k,
            seed,
            lambda: 1.0,
            sigma1: 0.5,
            sigma2: 100.0,
        };
        let graph = VoxelGraph::build(nodes.clone(), &roi, &params).unwrap();

        // Dense adjacency from the replayed sampler and the independent
        // weight formula.
        let edges = replay_edges(&nodes, dims, k, seed);
        let mut dense = vec![0.0; n * n];
        for &(i, j) in &edges {
            let w = oracle_weight(&nodes[i], &nodes[j], 1.0, 0.5, 100.0);
            dense[i * n + j] = w;
            dense[j * n + i] = w;
        }

        // Structure: same undirected edge set.
        let mut got_edges = BTreeSet::new();
        for i in 0..n {
            for (j, _) in graph.csr.row(i) {
                got_edges.insert((i.min(j), i.max(j)));
            }
        }
        assert_eq!(got_edges, edges, "edge structure dims {dims:?} k {k}");

        // Weights within 1e-12 of the independent formula.
        let got_dense = graph.csr.to_dense();
        for idx in 0..n * n {
            assert!(
                (got_dense[idx] - dense[idx]).abs() < 1e-12,
                "weight mismatch at {idx}: {} vs {}",
                got_dense[idx],
                dense[idx]
            );
        }

        // Normalization within 1e-12 of a dense computation.
        let mut tilde = dense.clone();
        for i in 0..n {
            tilde[i * n + i] += 1.0;
        }
        let deg: Vec<f64> = (0..n)
            .map(|i| tilde[i * n..(i + 1) * n].iter().sum())
            .collect();
        let got_norm = graph.norm_adj.to_dense();
        for i in 0..n {
            for j in 0..n {
                let want = tilde[i * n + j] / (deg[i] * deg[j]).sqrt();
                assert!(
                    (got_norm[i * n + j] - want).abs() < 1e-12,
                    "norm mismatch at ({i},{j}): {} vs {want}",
                    got_norm[i * n + j]
                );
            }
        }
    }
}

#[test]
fn edge_weight_is_symmetric_on_random_pairs() {
    let mut rng = ChaCha20Rng::seed_from_u64(505);
    let (nodes, _) = random_nodes(&mut rng, (10, 10, 10));
    for _ in 0..1000 {
        let a = &nodes[rng.random_range(0..nodes.len())];
        let b = &nodes[rng.random_range(0..nodes.len())];
        let wab = edge_weight(a, b, 1.3, 0.5, 100.0);
        let wba = edge_weight(b, a, 1.3, 0.5, 100.0);
        assert_eq!(wab.to_bits(), wba.to_bits());
        assert!(wab >= 0.0);
    }
}

#[test]
fn diversity_reference_points() {
    assert_eq!(diversity(0.42, 0.42), 0.0);
    assert!((diversity(0.9, 0.1) - 5.07188).abs() < 1e-4);
}

#[test]
fn four_cubed_roi_with_default_k_replays_and_bounds_degrees() {
    let mut rng = ChaCha20Rng::seed_from_u64(606);
    let dims = (4, 4, 4);
    let (nodes, roi) = random_nodes(&mut rng, dims);
    let k = 16;
    let seed = 21;
    let edges = build_edges(&nodes, &roi, k, seed);
    let expected = replay_edges(&nodes, dims, k, seed);
    let got: BTreeSet<(usize, usize)> = edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
    assert_eq!(got.len(), edges.len(), "no duplicate undirected pairs");
    assert_eq!(got, expected);

    let mut degree = vec![0usize; nodes.len()];
    for &(i, j) in &edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    for (i, node) in nodes.iter().enumerate() {
        let (x, y, z) = node.voxel;
        let in_roi_faces = [x > 0, x < 3, y > 0, y < 3, z > 0, z < 3]
            .iter()
            .filter(|&&b| b)
            .count();
        assert!(degree[i] >= in_roi_faces.min(6) && degree[i] >= k.min(nodes.len() - 1));
        assert!(degree[i] <= 6 + k + nodes.len());
    }
}

#[test]
fn graph_build_is_byte_deterministic() {
    let mut rng = ChaCha20Rng::seed_from_u64(707);
    let (nodes, roi) = random_nodes(&mut rng, (5, 4, 3));
    let params = EdgeParams {
        k: 6,
        seed: 3,
        lambda: 1.0,
        sigma1: 0.5,
        sigma2: 100.0,
    };
    let a = VoxelGraph::build(nodes.clone(), &roi, &params).unwrap();
    let b = VoxelGraph::build(nodes, &roi, &params).unwrap();
    assert_eq!(a.csr.row_offsets(), b.csr.row_offsets());
    assert_eq!(a.csr.col_indices(), b.csr.col_indices());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
    assert_eq!(bits(a.csr.values()), bits(b.csr.values()));
    assert_eq!(bits(a.norm_adj.values()), bits(b.norm_adj.values()));
}
