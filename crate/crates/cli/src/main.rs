//! `segrefine`: refine binary volumetric segmentations with
//! uncertainty-gated graph learning.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use segrefine_core::gcn::TrainConfig;
use segrefine_core::{RefineConfig, ReplacePolicy};

#[derive(Parser)]
#[command(
    name = "segrefine",
    version,
    about = "Refines a volumetric segmentation using stochastic-pass uncertainty and a graph network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate the stochastic passes into expectation and entropy volumes.
    Aggregate {
        /// Manifest JSON listing the pass volumes.
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (defaults to the manifest's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full refinement pipeline; writes the refined mask and a
    /// report.
    Refine {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigFlags,
        /// Also write the per-epoch loss curve as CSV.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
        /// Also write a parameter checkpoint (JSON header + raw payload).
        #[arg(long)]
        save_params: Option<PathBuf>,
        /// Also dump the voxel graph (node table + edge list) for debugging.
        #[arg(long)]
        dump_graph: Option<PathBuf>,
    },
    /// Print the dice score of a mask against another mask.
    Eval {
        /// Prediction mask header.
        pred: PathBuf,
        /// Reference mask header.
        truth: PathBuf,
        /// Also print the relative improvement against this expectation
        /// dice.
        #[arg(long)]
        expectation_dsc: Option<f64>,
    },
    /// Generate a synthetic phantom dataset with a manifest.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Volume size: a single N for a cube or NXxNYxNZ.
        #[arg(long, default_value = "48")]
        size: String,
        /// Number of stochastic passes.
        #[arg(long, default_value_t = 20)]
        passes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refine at several uncertainty thresholds and emit a CSV table.
    SweepTau {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated thresholds.
        #[arg(long, default_value = "0.001,0.3,0.5,0.8,0.999")]
        taus: String,
        /// CSV output path (defaults to <output_dir>/sweep_tau.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigFlags,
    },
}

/// Pipeline tunables exposed as flags; defaults mirror `RefineConfig`.
#[derive(Args)]
struct ConfigFlags {
    /// Entropy threshold marking voxels as uncertain.
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    /// Random long-range connections per node.
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// ROI dilation radius.
    #[arg(long = "dilate", default_value_t = 2)]
    dilate: usize,
    /// Diversity balance factor in the edge weight.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Intensity kernel width.
    #[arg(long, default_value_t = 0.5)]
    sigma1: f64,
    /// Spatial kernel width.
    #[arg(long, default_value_t = 100.0)]
    sigma2: f64,
    /// Training epochs.
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Learning rate.
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    /// Parameter initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Long-range edge sampler seed.
    #[arg(long = "edge-seed", default_value_t = 0)]
    edge_seed: u64,
    /// Skip the largest-connected-component filter on the input prediction.
    #[arg(long = "no-lcc")]
    no_lcc: bool,
    /// Replace only uncertain voxels instead of the whole ROI.
    #[arg(long = "uncertain-only")]
    uncertain_only: bool,
}

impl ConfigFlags {
    fn to_config(&self) -> RefineConfig {
        RefineConfig {
            tau: self.tau,
            k: self.k,
            dilation_radius: self.dilate,
            lambda: self.lambda,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            train: TrainConfig {
                epochs: self.epochs,
                learning_rate: self.lr,
                init_seed: self.seed,
                ..TrainConfig::default()
            },
            edge_seed: self.edge_seed,
            apply_lcc_to_input: !self.no_lcc,
            replace_policy: if self.uncertain_only {
                ReplacePolicy::UncertainOnly
            } else {
                ReplacePolicy::FullReplacement
            },
        }
    }
}

fn parse_taus(taus: &str) -> anyhow::Result<Vec<f64>> {
    taus.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| anyhow::anyhow!("invalid tau {s:?}: {e}"))
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Aggregate { manifest, out } => commands::cmd_aggregate(&manifest, out),
        Command::Refine {
            manifest,
            out,
            config,
            loss_csv,
            save_params,
            dump_graph,
        } => commands::cmd_refine(
            &manifest,
            out,
            &config.to_config(),
            &commands::RefineArtifacts {
                loss_csv,
                save_params,
                dump_graph,
            },
        ),
        Command::Eval {
            pred,
            truth,
            expectation_dsc,
        } => commands::cmd_eval(&pred, &truth, expectation_dsc),
        Command::Synth {
            seed,
            size,
            passes,
            out,
        } => commands::cmd_synth(seed, &size, passes, &out),
        Command::SweepTau {
            manifest,
            taus,
            out,
            config,
        } => commands::cmd_sweep_tau(&manifest, &parse_taus(&taus)?, out, &config.to_config()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            // One machine-parsable line per error.
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid usage");
            eprintln!("{first}");
            return ExitCode::from(2);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": ").replace('\n', "; "));
            ExitCode::FAILURE
        }
    }
}
