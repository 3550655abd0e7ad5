//! End-to-end refinement: uncertainty maps, ROI, graph, training,
//! prediction, and output assembly, plus the threshold-sweep experiment and
//! the relative-improvement metric.

mod phantom;

pub use phantom::{synth_phantom, Phantom, PhantomParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{predict, train, TrainConfig};
use crate::graph::{build_nodes, build_roi, EdgeParams, VoxelGraph};
use crate::uncertainty::UncertaintyMaps;
use crate::volume::{dice, largest_connected_component, PassStack, Volume3, VolumeKind};

/// Output assembly policy inside the ROI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplacePolicy {
    /// The GCN prediction overrides every ROI voxel.
    #[serde(rename = "full-replacement-inside-roi")]
    FullReplacement,
    /// Only uncertain voxels take the GCN prediction; confident ones keep
    /// the input prediction.
    #[serde(rename = "uncertain-only")]
    UncertainOnly,
}

/// Every tunable of the refinement pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Entropy threshold marking a voxel as uncertain.
    pub tau: f64,
    /// Random long-range connections per node.
    pub k: usize,
    /// Dilation radius applied to the uncertain mask when building the ROI.
    pub dilation_radius: usize,
    /// Balance factor on the diversity term of the edge weight.
    pub lambda: f64,
    /// Intensity kernel width.
    pub sigma1: f64,
    /// Spatial kernel width.
    pub sigma2: f64,
    pub train: TrainConfig,
    /// Seed of the long-range edge sampler.
    pub edge_seed: u64,
    /// Keep only the largest connected component of the input prediction
    /// before analysis.
    pub apply_lcc_to_input: bool,
    pub replace_policy: ReplacePolicy,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            tau: 0.8,
            k: 16,
            dilation_radius: 2,
            lambda: 1.0,
            sigma1: 0.5,
            sigma2: 100.0,
            train: TrainConfig::default(),
            edge_seed: 0,
            apply_lcc_to_input: true,
            replace_policy: ReplacePolicy::FullReplacement,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let tau_ok = self.tau > 0.0 && self.tau < 1.0;
        if !tau_ok {
            return Err(Error::InvalidConfig(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        let positive = |s: f64| s.is_finite() && s > 0.0;
        if !positive(self.sigma1) || !positive(self.sigma2) {
            return Err(Error::InvalidConfig(format!(
                "sigma1 and sigma2 must be positive, got {} and {}",
                self.sigma1, self.sigma2
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite".into()));
        }
        self.train.validate()
    }

    fn edge_params(&self) -> EdgeParams {
        EdgeParams {
            k: self.k,
            seed: self.edge_seed,
            lambda: self.lambda,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
        }
    }
}

/// Seeds recorded alongside the config for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedsEcho {
    pub init_seed: u64,
    pub edge_seed: u64,
}

/// Everything a refinement run reports. Metric fields are present only when
/// ground truth was supplied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dice_before: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dice_after: Option<f64>,
    /// Dice of the expectation binarized at 0.5 against ground truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expectation_dice: Option<f64>,
    /// Relative improvement of the refined dice over the expectation dice,
    /// in percent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_imp: Option<f64>,
    pub node_count: usize,
    pub labeled_count: usize,
    pub unlabeled_count: usize,
    pub uncertain_voxels: usize,
    pub pass_count: usize,
    pub loss_curve: Vec<f64>,
    pub config: RefineConfig,
    pub seeds: SeedsEcho,
    pub warnings: Vec<String>,
}

/// A trained graph kept around for checkpointing and debugging.
#[derive(Debug, Clone)]
pub struct TrainedGraph {
    pub graph: VoxelGraph,
    pub params: crate::gcn::GcnParams,
}

/// Full result of one refinement run.
#[derive(Debug, Clone)]
pub struct RefineRun {
    pub refined: Volume3,
    pub report: RefineReport,
    /// Absent when the ROI was empty and no graph was trained.
    pub trained: Option<TrainedGraph>,
}

/// Refines a segmentation: aggregates the stochastic passes, builds the
/// uncertainty-gated voxel graph, trains the GCN on the confident voxels,
/// and assembles the refined mask. Inside the ROI the output follows the
/// replace policy; outside it keeps the (optionally LCC-filtered) input
/// prediction. Deterministic for fixed inputs and seeds.
pub fn refine(
    intensity: &Volume3,
    passes: &PassStack,
    prediction: &Volume3,
    ground_truth: Option<&Volume3>,
    config: &RefineConfig,
) -> Result<(Volume3, RefineReport)> {
    let run = refine_full(intensity, passes, prediction, ground_truth, config)?;
    Ok((run.refined, run.report))
}

/// Like [`refine`], but also hands back the trained graph and parameters.
pub fn refine_full(
    intensity: &Volume3,
    passes: &PassStack,
    prediction: &Volume3,
    ground_truth: Option<&Volume3>,
    config: &RefineConfig,
) -> Result<RefineRun> {
    config.validate()?;
    let maps = UncertaintyMaps::compute(passes, config.tau)?;
    refine_with_maps(
        intensity,
        &maps,
        passes.len(),
        prediction,
        ground_truth,
        config,
    )
}

/// Refinement core reused by [`refine`] and [`sweep_tau`]; takes
/// precomputed uncertainty maps.
fn refine_with_maps(
    intensity: &Volume3,
    maps: &UncertaintyMaps,
    pass_count: usize,
    prediction: &Volume3,
    ground_truth: Option<&Volume3>,
    config: &RefineConfig,
) -> Result<RefineRun> {
    assert_eq!(
        prediction.kind(),
        VolumeKind::Mask,
        "prediction must be a mask"
    );
    intensity.check_same_geometry(prediction, "intensity vs prediction")?;
    intensity.check_same_geometry(&maps.expectation, "intensity vs passes")?;
    if let Some(gt) = ground_truth {
        intensity.check_same_geometry(gt, "intensity vs ground truth")?;
    }

    let analyzed = if config.apply_lcc_to_input {
        largest_connected_component(prediction)
    } else {
        prediction.clone()
    };

    let mut warnings = Vec::new();
    let roi = build_roi(
        &maps.uncertain_mask,
        &maps.expectation,
        config.dilation_radius,
    )?;
    let uncertain_voxels = maps.uncertain_mask.foreground_count();

    if roi.foreground_count() == 0 {
        warnings.push("ROI is empty; returning the input prediction unchanged".to_string());
        let report = assemble_report(
            &analyzed,
            &analyzed,
            maps,
            ground_truth,
            config,
            0,
            0,
            Vec::new(),
            uncertain_voxels,
            pass_count,
            warnings,
        )?;
        return Ok(RefineRun {
            refined: analyzed,
            report,
            trained: None,
        });
    }

    let nodes = build_nodes(
        &roi,
        intensity,
        &maps.expectation,
        &maps.entropy,
        &analyzed,
        &maps.uncertain_mask,
    )?;
    let graph = VoxelGraph::build(nodes, &roi, &config.edge_params())?;
    let outcome = train(&graph, &config.train)?;
    let node_preds = predict(&graph, &outcome.params, 0.5);

    let mut refined_bits: Vec<bool> = analyzed.data().iter().map(|&v| v != 0.0).collect();
    for (node, &fg) in graph.nodes.iter().zip(&node_preds) {
        let (x, y, z) = node.voxel;
        let i = analyzed.index(x, y, z);
        match config.replace_policy {
            ReplacePolicy::FullReplacement => refined_bits[i] = fg,
            ReplacePolicy::UncertainOnly => {
                if maps.uncertain_mask.is_foreground(i) {
                    refined_bits[i] = fg;
                }
            }
        }
    }
    let refined = Volume3::mask_from_bits(analyzed.dims(), analyzed.spacing(), &refined_bits);

    let report = assemble_report(
        &analyzed,
        &refined,
        maps,
        ground_truth,
        config,
        graph.node_count(),
        graph.labeled_count(),
        outcome.loss_curve,
        uncertain_voxels,
        pass_count,
        warnings,
    )?;
    Ok(RefineRun {
        refined,
        report,
        trained: Some(TrainedGraph {
            graph,
            params: outcome.params,
        }),
    })
}

#[allow(clippy::too_many_arguments)]
fn assemble_report(
    before: &Volume3,
    after: &Volume3,
    maps: &UncertaintyMaps,
    ground_truth: Option<&Volume3>,
    config: &RefineConfig,
    node_count: usize,
    labeled_count: usize,
    loss_curve: Vec<f64>,
    uncertain_voxels: usize,
    pass_count: usize,
    mut warnings: Vec<String>,
) -> Result<RefineReport> {
    let mut dice_before = None;
    let mut dice_after = None;
    let mut expectation_dice = None;
    let mut rel_imp = None;
    if let Some(gt) = ground_truth {
        dice_before = Some(dice(before, gt)?);
        let after_dice = dice(after, gt)?;
        dice_after = Some(after_dice);
        let e_dice = dice(&maps.expectation.threshold(0.5), gt)?;
        expectation_dice = Some(e_dice);
        if e_dice > 0.0 {
            rel_imp = Some(relative_improvement(after_dice, e_dice)?);
        } else {
            warnings.push("expectation dice is zero; rel_imp omitted".to_string());
        }
    }
    Ok(RefineReport {
        dice_before,
        dice_after,
        expectation_dice,
        rel_imp,
        node_count,
        labeled_count,
        unlabeled_count: node_count - labeled_count,
        uncertain_voxels,
        pass_count,
        loss_curve,
        config: config.clone(),
        seeds: SeedsEcho {
            init_seed: config.train.init_seed,
            edge_seed: config.edge_seed,
        },
        warnings,
    })
}

/// Signed percentage improvement of `gcn_dsc` over `expectation_dsc`.
pub fn relative_improvement(gcn_dsc: f64, expectation_dsc: f64) -> Result<f64> {
    if expectation_dsc <= 0.0 {
        return Err(Error::ZeroBaselineDice);
    }
    Ok((gcn_dsc - expectation_dsc) / expectation_dsc * 100.0)
}

/// One row of the threshold sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub dice_before: f64,
    pub dice_after: f64,
    pub uncertain_voxels: usize,
    pub node_count: usize,
}

/// Runs the refinement at every threshold in `taus` with shared seeds.
/// Expectation and entropy are computed once and reused.
pub fn sweep_tau(
    intensity: &Volume3,
    passes: &PassStack,
    prediction: &Volume3,
    ground_truth: &Volume3,
    taus: &[f64],
    config: &RefineConfig,
) -> Result<Vec<SweepRow>> {
    if taus.is_empty() {
        return Err(Error::InvalidConfig("tau list is empty".into()));
    }
    let shared_expectation = crate::uncertainty::expectation(passes);
    let shared_entropy = crate::uncertainty::entropy_map(&shared_expectation)?;
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let run_config = RefineConfig {
            tau,
            ..config.clone()
        };
        run_config.validate()?;
        let maps = UncertaintyMaps {
            expectation: shared_expectation.clone(),
            entropy: shared_entropy.clone(),
            uncertain_mask: shared_entropy.threshold(tau),
            tau,
        };
        let run = refine_with_maps(
            intensity,
            &maps,
            passes.len(),
            prediction,
            Some(ground_truth),
            &run_config,
        )?;
        let report = run.report;
        rows.push(SweepRow {
            tau,
            dice_before: report.dice_before.expect("ground truth supplied"),
            dice_after: report.dice_after.expect("ground truth supplied"),
            uncertain_voxels: report.uncertain_voxels,
            node_count: report.node_count,
        });
    }
    Ok(rows)
}

/// CSV rendering of a sweep: header plus one row per threshold.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("tau,dice_before,dice_after,uncertain_voxels,node_count\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.tau, r.dice_before, r.dice_after, r.uncertain_voxels, r.node_count
        ));
    }
    out
}
