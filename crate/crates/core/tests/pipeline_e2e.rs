//! End-to-end behavior of the refinement pipeline on synthetic phantoms.

use segrefine_core::gcn::TrainConfig;
use segrefine_core::graph::build_roi;
use segrefine_core::pipeline::{
    refine, sweep_csv, sweep_tau, synth_phantom, PhantomParams, RefineConfig,
};
use segrefine_core::uncertainty::UncertaintyMaps;
use segrefine_core::volume::PassStack;

fn quick_config() -> RefineConfig {
    RefineConfig {
        train: TrainConfig {
            epochs: 60,
            ..TrainConfig::default()
        },
        ..RefineConfig::default()
    }
}

fn small_phantom(seed: u64) -> segrefine_core::Phantom {
    let params = PhantomParams {
        passes: 10,
        ..PhantomParams::default()
    };
    synth_phantom(seed, (26, 26, 26), &params).unwrap()
}

#[test]
fn phantom_dice_window_holds_over_100_seeds() {
    for seed in 0..100u64 {
        let p = synth_phantom(seed, (48, 48, 48), &PhantomParams::default()).unwrap();
        let d = segrefine_core::volume::dice(&p.prediction, &p.ground_truth).unwrap();
        assert!(
            (0.6..=0.9).contains(&d),
            "seed {seed}: prediction dice {d} outside the construction window"
        );
    }
}

#[test]
fn refined_mask_differs_from_input_only_inside_roi() {
    let p = small_phantom(7);
    let config = quick_config();
    let (refined, _) = refine(&p.intensity, &p.passes, &p.prediction, None, &config).unwrap();

    let maps = UncertaintyMaps::compute(&p.passes, config.tau).unwrap();
    let roi = build_roi(
        &maps.uncertain_mask,
        &maps.expectation,
        config.dilation_radius,
    )
    .unwrap();
    let analyzed = segrefine_core::volume::largest_connected_component(&p.prediction);
    for i in 0..refined.voxel_count() {
        if !roi.is_foreground(i) {
            assert_eq!(
                refined.is_foreground(i),
                analyzed.is_foreground(i),
                "voxel {i} changed outside the ROI"
            );
        }
    }
}

#[test]
fn labeled_count_equals_confident_roi_voxels() {
    let p = small_phantom(9);
    let config = quick_config();
    let (_, report) = refine(&p.intensity, &p.passes, &p.prediction, None, &config).unwrap();

    let maps = UncertaintyMaps::compute(&p.passes, config.tau).unwrap();
    let roi = build_roi(
        &maps.uncertain_mask,
        &maps.expectation,
        config.dilation_radius,
    )
    .unwrap();
    let confident = (0..roi.voxel_count())
        .filter(|&i| roi.is_foreground(i) && maps.entropy.value(i) <= config.tau)
        .count();
    assert_eq!(report.labeled_count, confident);
    assert_eq!(
        report.labeled_count + report.unlabeled_count,
        report.node_count
    );
}

#[test]
fn refine_is_invariant_to_pass_order() {
    let p = small_phantom(11);
    let config = quick_config();
    let (a, ra) = refine(
        &p.intensity,
        &p.passes,
        &p.prediction,
        Some(&p.ground_truth),
        &config,
    )
    .unwrap();

    let mut reordered = p.passes.passes().to_vec();
    reordered.reverse();
    reordered.swap(2, 5);
    let shuffled = PassStack::new(reordered).unwrap();
    let (b, rb) = refine(
        &p.intensity,
        &shuffled,
        &p.prediction,
        Some(&p.ground_truth),
        &config,
    )
    .unwrap();

    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&ra).unwrap(),
        serde_json::to_string(&rb).unwrap()
    );
}

#[test]
fn degenerate_high_tau_graph_still_runs() {
    // tau = 0.999 leaves almost every node labeled; the pipeline must train
    // on everything and predict everywhere.
    let p = small_phantom(13);
    let config = RefineConfig {
        tau: 0.999,
        ..quick_config()
    };
    let (refined, report) = refine(
        &p.intensity,
        &p.passes,
        &p.prediction,
        Some(&p.ground_truth),
        &config,
    )
    .unwrap();
    assert!(report.node_count > 0);
    assert!(report.labeled_count > 0);
    assert_eq!(refined.voxel_count(), p.prediction.voxel_count());
}

#[test]
fn uncertain_only_policy_preserves_confident_voxels() {
    let p = small_phantom(15);
    let mut config = quick_config();
    config.replace_policy = segrefine_core::ReplacePolicy::UncertainOnly;
    let (refined, _) = refine(&p.intensity, &p.passes, &p.prediction, None, &config).unwrap();

    let maps = UncertaintyMaps::compute(&p.passes, config.tau).unwrap();
    let analyzed = segrefine_core::volume::largest_connected_component(&p.prediction);
    for i in 0..refined.voxel_count() {
        if !maps.uncertain_mask.is_foreground(i) {
            assert_eq!(refined.is_foreground(i), analyzed.is_foreground(i));
        }
    }
}

#[test]
fn sweep_covers_thresholds_and_counts_decrease() {
    let p = small_phantom(17);
    let taus = [0.001, 0.3, 0.5, 0.8, 0.999];
    let rows = sweep_tau(
        &p.intensity,
        &p.passes,
        &p.prediction,
        &p.ground_truth,
        &taus,
        &quick_config(),
    )
    .unwrap();
    assert_eq!(rows.len(), 5);
    let mut prev = usize::MAX;
    for row in &rows {
        assert!(
            row.uncertain_voxels <= prev,
            "uncertain count grew at tau {}",
            row.tau
        );
        prev = row.uncertain_voxels;
        assert!(row.dice_before > 0.0 && row.dice_after > 0.0);
    }

    let csv = sweep_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "tau,dice_before,dice_after,uncertain_voxels,node_count"
    );
    assert_eq!(lines.len(), 6);
}

#[test]
fn single_tau_sweep_matches_refine() {
    let p = small_phantom(19);
    let config = RefineConfig {
        tau: 0.5,
        ..quick_config()
    };
    let rows = sweep_tau(
        &p.intensity,
        &p.passes,
        &p.prediction,
        &p.ground_truth,
        &[0.5],
        &config,
    )
    .unwrap();
    assert_eq!(rows.len(), 1);
    let (_, report) = refine(
        &p.intensity,
        &p.passes,
        &p.prediction,
        Some(&p.ground_truth),
        &config,
    )
    .unwrap();
    assert_eq!(rows[0].dice_before, report.dice_before.unwrap());
    assert_eq!(rows[0].dice_after, report.dice_after.unwrap());
    assert_eq!(rows[0].node_count, report.node_count);
    assert_eq!(rows[0].uncertain_voxels, report.uncertain_voxels);
}

#[test]
fn empty_tau_list_is_rejected() {
    let p = small_phantom(21);
    assert!(sweep_tau(
        &p.intensity,
        &p.passes,
        &p.prediction,
        &p.ground_truth,
        &[],
        &quick_config(),
    )
    .is_err());
}
