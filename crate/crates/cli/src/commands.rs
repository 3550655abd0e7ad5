//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use segrefine_core::gcn::{save_checkpoint, write_loss_csv};
use segrefine_core::pipeline::{
    refine_full, sweep_csv, sweep_tau, synth_phantom, PhantomParams, RefineConfig,
};
use segrefine_core::uncertainty::{entropy_map, expectation};
use segrefine_core::volume::dice;
use segrefine_core::volume::io::{load_volume, save_volume};
use segrefine_core::{relative_improvement, RefineReport};

use crate::manifest::Manifest;

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_report(report: &RefineReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing report {}", path.display()))
}

/// `aggregate`: expectation and entropy volumes from the manifest's passes.
pub fn cmd_aggregate(manifest_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let manifest = Manifest::load(manifest_path)?;
    let passes = manifest.load_passes(manifest_path)?;
    let out_dir = out.unwrap_or_else(|| manifest.resolved_output_dir(manifest_path));
    ensure_dir(&out_dir)?;
    let e = expectation(&passes);
    let h = entropy_map(&e)?;
    save_volume(&e, &out_dir.join("expectation.json"))?;
    save_volume(&h, &out_dir.join("entropy.json"))?;
    println!(
        "wrote {} and {}",
        out_dir.join("expectation.json").display(),
        out_dir.join("entropy.json").display()
    );
    Ok(())
}

/// Extra artifacts the `refine` subcommand can emit.
#[derive(Default)]
pub struct RefineArtifacts {
    pub loss_csv: Option<PathBuf>,
    pub save_params: Option<PathBuf>,
    pub dump_graph: Option<PathBuf>,
}

/// `refine`: the full pipeline; writes the refined mask and the report.
pub fn cmd_refine(
    manifest_path: &Path,
    out: Option<PathBuf>,
    config: &RefineConfig,
    artifacts: &RefineArtifacts,
) -> Result<()> {
    let manifest = Manifest::load(manifest_path)?;
    let data = manifest.load_all(manifest_path)?;
    let out_dir = out.unwrap_or_else(|| manifest.resolved_output_dir(manifest_path));
    ensure_dir(&out_dir)?;

    let run = refine_full(
        &data.intensity,
        &data.passes,
        &data.prediction,
        data.ground_truth.as_ref(),
        config,
    )?;
    save_volume(&run.refined, &out_dir.join("refined.json"))?;
    write_report(&run.report, &out_dir.join("report.json"))?;

    if let Some(path) = &artifacts.loss_csv {
        write_loss_csv(&run.report.loss_curve, path)?;
    }
    if let Some(trained) = &run.trained {
        if let Some(path) = &artifacts.save_params {
            save_checkpoint(
                &trained.params,
                config.train.init_seed,
                config.train.epochs,
                path,
            )?;
        }
        if let Some(dir) = &artifacts.dump_graph {
            ensure_dir(dir)?;
            let mut node_table = fs::File::create(dir.join("nodes.txt"))?;
            trained.graph.write_node_table(&mut node_table)?;
            let mut edge_list = fs::File::create(dir.join("edges.txt"))?;
            trained.graph.write_edge_list(&mut edge_list)?;
        }
    }

    for warning in &run.report.warnings {
        eprintln!("warning: {warning}");
    }
    if let (Some(before), Some(after)) = (run.report.dice_before, run.report.dice_after) {
        println!("dice_before {before}");
        println!("dice_after {after}");
    }
    println!(
        "nodes {} labeled {}",
        run.report.node_count, run.report.labeled_count
    );
    println!("wrote {}", out_dir.join("refined.json").display());
    Ok(())
}

/// `eval`: dice between two masks, optionally with the relative improvement
/// against a supplied expectation dice.
pub fn cmd_eval(pred: &Path, truth: &Path, expectation_dsc: Option<f64>) -> Result<()> {
    let a = load_volume(pred).context("loading prediction mask")?;
    let b = load_volume(truth).context("loading truth mask")?;
    let d = dice(&a, &b)?;
    println!("dice {d}");
    if let Some(e) = expectation_dsc {
        let r = relative_improvement(d, e)?;
        println!("rel_imp {r}");
    }
    Ok(())
}

/// `synth`: a full phantom dataset plus its manifest.
pub fn cmd_synth(seed: u64, size: &str, passes: usize, out: &Path) -> Result<()> {
    let dims = parse_size(size)?;
    let params = PhantomParams {
        passes,
        ..PhantomParams::default()
    };
    let phantom = synth_phantom(seed, dims, &params)?;
    ensure_dir(out)?;

    save_volume(&phantom.intensity, &out.join("intensity.json"))?;
    save_volume(&phantom.ground_truth, &out.join("ground_truth.json"))?;
    save_volume(&phantom.prediction, &out.join("prediction.json"))?;
    let mut pass_paths = Vec::with_capacity(passes);
    for (t, pass) in phantom.passes.passes().iter().enumerate() {
        let name = format!("pass_{t:03}.json");
        save_volume(pass, &out.join(&name))?;
        pass_paths.push(PathBuf::from(name));
    }

    let manifest = Manifest {
        passes: pass_paths,
        intensity: PathBuf::from("intensity.json"),
        prediction: PathBuf::from("prediction.json"),
        ground_truth: Some(PathBuf::from("ground_truth.json")),
        output_dir: PathBuf::from("."),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out.join("manifest.json"), text)?;
    println!(
        "wrote {} volumes and manifest.json to {}",
        passes + 3,
        out.display()
    );
    Ok(())
}

/// `sweep-tau`: refinement dice across uncertainty thresholds, as CSV.
pub fn cmd_sweep_tau(
    manifest_path: &Path,
    taus: &[f64],
    out: Option<PathBuf>,
    config: &RefineConfig,
) -> Result<()> {
    if taus.is_empty() {
        bail!("at least one tau is required");
    }
    for &tau in taus {
        if !(tau > 0.0 && tau < 1.0) {
            bail!("invalid tau {tau}: thresholds must lie in (0, 1)");
        }
    }
    let manifest = Manifest::load(manifest_path)?;
    let data = manifest.load_all(manifest_path)?;
    let Some(ground_truth) = data.ground_truth.as_ref() else {
        bail!("manifest field ground_truth is required for sweep-tau");
    };
    let rows = sweep_tau(
        &data.intensity,
        &data.passes,
        &data.prediction,
        ground_truth,
        taus,
        config,
    )?;
    let csv = sweep_csv(&rows);
    let out_path = out.unwrap_or_else(|| {
        manifest
            .resolved_output_dir(manifest_path)
            .join("sweep_tau.csv")
    });
    if let Some(parent) = out_path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(&out_path, csv.as_bytes())
        .with_context(|| format!("writing {}", out_path.display()))?;
    print!("{csv}");
    Ok(())
}

fn parse_size(size: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = size.split('x').collect();
    let parse = |s: &str| -> Result<usize> {
        s.trim()
            .parse::<usize>()
            .with_context(|| format!("invalid size component {s:?}"))
    };
    match parts.as_slice() {
        [one] => {
            let n = parse(one)?;
            Ok((n, n, n))
        }
        [a, b, c] => Ok((parse(a)?, parse(b)?, parse(c)?)),
        _ => bail!("invalid size {size:?}: expected N or NXxNYxNZ"),
    }
}
