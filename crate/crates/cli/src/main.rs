mod config;
mod dataset;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "adagnn", version, about = "Boosted GNN ensembles: data generation, training, evaluation and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replaces the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; replaces the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted config key and TOML value, e.g. `boosting.max_learners=7`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Accept hyper-parameters outside the tuning grids.
    #[arg(long)]
    allow_off_grid: bool,
    /// Print the fully resolved config and exit.
    #[arg(long)]
    print_effective_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-modal dataset.
    Synth(Common),
    /// Train AdaGNN (or a single-learner baseline when max_learners = 1).
    Train(Common),
    /// Rescore a checkpoint on a dataset and split without retraining.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Paired AdaGNN and baseline runs along one axis.
    Sweep(Common),
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut overrides = self.overrides.clone();
        if self.allow_off_grid {
            overrides.push("allow_off_grid=true".into());
        }
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        let mut cfg = ExperimentConfig::load(&self.config, &overrides)?;
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        let out = cfg
            .output_dir
            .clone()
            .ok_or_else(|| anyhow!("no output directory: pass --out or set output_dir in the config"))?;
        Ok((cfg, out))
    }
}

fn execute(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Synth(c) | Command::Train(c) | Command::Sweep(c) => c,
        Command::Eval { common, .. } => common,
    };
    let (cfg, out) = common.resolve()?;
    if common.print_effective_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    match &cli.command {
        Command::Synth(_) => run::synth(&cfg, &out),
        Command::Train(_) => run::print_summary(&run::train(&cfg, &out)?),
        Command::Eval { checkpoint, .. } => {
            let report = run::eval(&cfg, checkpoint, &out)?;
            run::print_summary(&report)?;
            if let Some(f) = report.unseen_test_fraction {
                println!("unseen_test_fraction {f:.4}");
            }
            Ok(())
        }
        Command::Sweep(_) => run::sweep(&cfg, &out),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let error = serde_json::json!({
                "error": e.to_string(),
                "causes": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
            });
            eprintln!("{error}");
            ExitCode::FAILURE
        }
    }
}
