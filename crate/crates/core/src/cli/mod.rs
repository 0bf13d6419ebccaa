//! Command-line entry points: single runs, grid sweeps and IS-weight
//! diagnostics. Every subcommand takes a flat key-value config file plus
//! per-key override flags.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use crate::trainer::ConfigBuilder;

pub use commands::{
    mean_lag1_weight, run_to_dir, score_row, sweep, synth_sweep, write_manifest, GridAxis,
    SweepOutcome, SynthRow,
};

#[derive(Debug, Parser)]
#[command(
    name = "ppo-mber",
    version,
    about = "PPO with adaptive multi-batch experience replay"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train once and write manifest, metrics and checkpoint to the run directory.
    Run(RunArgs),
    /// Train every cell of a grid and rank the configurations by normalized score.
    Sweep(SweepArgs),
    /// Train while logging IS-weight statistics, or sweep synth-K action dimensions.
    DiagIsweight(DiagArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grid axis as `key=v1,v2,...`; repeat for a product grid.
    #[arg(long = "grid", required = true)]
    pub grid: Vec<String>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run synth-K for each listed K and report the mean lag-1 batch weight.
    #[arg(long = "action-dims", value_delimiter = ',')]
    pub action_dims: Option<Vec<usize>>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// One optional flag per config key. Values stay as text so that parse
/// errors name the offending key.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub total_steps: Option<String>,
    #[arg(long)]
    pub horizon: Option<String>,
    #[arg(long)]
    pub minibatch: Option<String>,
    #[arg(long)]
    pub replay_length: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub step_size: Option<String>,
    #[arg(long)]
    pub clip: Option<String>,
    #[arg(long)]
    pub batch_drop: Option<String>,
    #[arg(long)]
    pub value_coef: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub adaptive: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out_dir: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fixed_minibatch: Option<String>,
    /// Contiguous mini-batches, for comparison experiments only.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub episodic_minibatch: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize_advantages: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub bootstrap_on_timeout: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> [(&'static str, &Option<String>); 19] {
        [
            ("env", &self.env),
            ("total-steps", &self.total_steps),
            ("horizon", &self.horizon),
            ("minibatch", &self.minibatch),
            ("replay-length", &self.replay_length),
            ("epochs", &self.epochs),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("step-size", &self.step_size),
            ("clip", &self.clip),
            ("batch-drop", &self.batch_drop),
            ("value-coef", &self.value_coef),
            ("adaptive", &self.adaptive),
            ("seed", &self.seed),
            ("out-dir", &self.out_dir),
            ("fixed-minibatch", &self.fixed_minibatch),
            ("episodic-minibatch", &self.episodic_minibatch),
            ("normalize-advantages", &self.normalize_advantages),
            ("bootstrap-on-timeout", &self.bootstrap_on_timeout),
        ]
    }

    pub fn apply(&self, builder: &mut ConfigBuilder) -> Result<()> {
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                builder.set(key, v)?;
            }
        }
        Ok(())
    }
}

/// Reads the optional config file and applies the overrides on top.
pub fn load_builder(config: Option<&PathBuf>, overrides: &Overrides) -> Result<ConfigBuilder> {
    let mut builder = match config {
        Some(path) => ConfigBuilder::from_kv(&std::fs::read_to_string(path)?)?,
        None => ConfigBuilder::new(),
    };
    overrides.apply(&mut builder)?;
    Ok(builder)
}

/// Runs the parsed command. Returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let config = load_builder(args.config.as_ref(), &args.overrides)?.build()?;
            let dir = commands::default_dir(&config);
            let records = run_to_dir(&config, &dir)?;
            eprintln!(
                "finished {} iterations, mean return (last 100 episodes): {}; wrote {}",
                records.len(),
                records
                    .last()
                    .and_then(|r| r.mean_return_100)
                    .map_or("n/a".to_string(), |v| format!("{v:.3}")),
                dir.display()
            );
            Ok(0)
        }
        Command::Sweep(args) => {
            let builder = load_builder(args.config.as_ref(), &args.overrides)?;
            let axes = args
                .grid
                .iter()
                .map(|g| g.parse())
                .collect::<Result<Vec<GridAxis>>>()?;
            let root = builder
                .out_dir()
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("sweep"));
            let outcome = sweep(&builder, &axes, &root)?;
            eprintln!(
                "{} cells completed, {} failed; summary in {}",
                outcome.completed,
                outcome.failed.len(),
                root.join("summary.csv").display()
            );
            Ok(if outcome.failed.is_empty() { 0 } else { 1 })
        }
        Command::DiagIsweight(args) => {
            let builder = load_builder(args.config.as_ref(), &args.overrides)?;
            match args.action_dims {
                Some(ks) => {
                    let root = builder
                        .out_dir()
                        .map(PathBuf::from)
                        .unwrap_or_else(|| PathBuf::from("diag-synth"));
                    let rows = synth_sweep(&builder, &ks, &root)?;
                    for row in rows {
                        println!(
                            "synth-{}: mean lag-1 batch weight {:.6}",
                            row.k, row.mean_lag1
                        );
                    }
                }
                None => {
                    let config = builder.build()?;
                    let dir = commands::default_dir(&config);
                    let records = run_to_dir(&config, &dir)?;
                    commands::write_isweight(&dir, &records, config.replay_length)?;
                    eprintln!("wrote {}", dir.join("isweight.csv").display());
                }
            }
            Ok(0)
        }
    }
}
