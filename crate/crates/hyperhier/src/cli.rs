//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::info;

use hyperhier_core::analysis::concavity_scan;

use crate::config::{self, RunConfig};
use crate::pipeline::{self, ANALYSIS_FILE, MODEL_FILE, TEST_FILE, TRAIN_FILE, TREE_FILE};
use crate::report::write_json;
use crate::{checkpoint, treefile, HarnessError};

#[derive(Debug, Parser)]
#[command(name = "hyperhier", version, about = "Flat hyperbolic and Euclidean classifiers with label-tree parent inference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic train/test dumps and the label tree
    Gen(RunArgs),
    /// Train a flat model on <out>/train.hheb and write <out>/model.ckpt
    Train(RunArgs),
    /// Evaluate <out>/model.ckpt on <out>/test.hheb at child and parent level
    Eval(RunArgs),
    /// Write embedding diagnostics for <out>/model.ckpt on <out>/test.hheb
    Analyze(RunArgs),
    /// Print hyperbolic distance against Euclidean distance for fixed norms
    Concavity(ConcavityArgs),
    /// Full pipeline: gen, train, eval and analyze
    Run(RunArgs),
}

/// Options shared by the experiment subcommands. Flags override the config
/// file, which overrides built-in defaults.
#[derive(Debug, Args)]
#[command(after_help = config_keys_help())]
pub struct RunArgs {
    /// Config file of `key = value` lines
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides HYPERHIER_OUT and the config file)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Classifier geometry: euclidean or hyperbolic
    #[arg(long)]
    pub geometry: Option<String>,
    /// Seed for data generation, initialization, batching and pair sampling
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of optimizer steps
    #[arg(long)]
    pub steps: Option<usize>,
    /// Label tree file
    #[arg(long, value_name = "FILE")]
    pub tree: Option<PathBuf>,
    /// Replace the tree's parent links by a seeded shuffle
    #[arg(long, value_name = "SEED")]
    pub shuffle_tree: Option<u64>,
    /// Any config key, e.g. `--set sigma=0.25`; may be repeated
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ConcavityArgs {
    /// Euclidean norms of the two points, each in [0, 1)
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0])]
    pub norms: Vec<f64>,
    /// Ascending Euclidean distances to tabulate
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
}

fn config_keys_help() -> String {
    let mut s = String::from("Config keys (defaults):\n");
    for (k, v) in config::DEFAULTS {
        let v = if v.is_empty() { "<unset>" } else { v };
        s.push_str(&format!("  {k} = {v}\n"));
    }
    s.push_str(&format!("{} overrides out_dir from the config file.", config::OUT_ENV));
    s
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, HarnessError> {
        let file = match &self.config {
            Some(p) => config::read_kv_file(p)?,
            None => Vec::new(),
        };
        let mut cli = Vec::new();
        let mut push = |k: &str, v: String| cli.push((k.to_string(), v));
        if let Some(v) = &self.out {
            push("out_dir", v.display().to_string());
        }
        if let Some(v) = &self.geometry {
            push("geometry", v.clone());
        }
        if let Some(v) = self.seed {
            push("seed", v.to_string());
        }
        if let Some(v) = self.steps {
            push("steps", v.to_string());
        }
        if let Some(v) = &self.tree {
            push("tree", v.display().to_string());
        }
        if let Some(v) = self.shuffle_tree {
            push("shuffle_tree_seed", v.to_string());
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("`--set {kv}` is not KEY=VALUE")))?;
            push(k.trim(), v.trim().to_string());
        }
        let env = std::env::var(config::OUT_ENV).ok();
        config::resolve(&file, env.as_deref(), &cli)
    }
}

/// Formats concavity rows as a whitespace-aligned table.
pub fn concavity_table(norm1: f64, norm2: f64, grid: &[f64]) -> Result<String, HarnessError> {
    let rows = concavity_scan(norm1, norm2, grid)?;
    let mut s = format!("{:>12} {:>20} {:>20} {:>20}\n", "d_E", "d_H", "dd_H/dd_E", "finite_diff");
    for r in rows {
        s.push_str(&format!(
            "{:>12.6} {:>20.12} {:>20.12} {:>20.12}\n",
            r.euclidean, r.hyperbolic, r.derivative, r.finite_difference
        ));
    }
    Ok(s)
}

pub fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Concavity(a) => {
            if a.norms.len() != 2 {
                return Err(HarnessError::Config("--norms takes exactly two values".into()));
            }
            print!("{}", concavity_table(a.norms[0], a.norms[1], &a.grid)?);
            Ok(())
        }
        Command::Run(a) => pipeline::run_experiment(&a.resolve()?).map(|_| ()),
        Command::Gen(a) => {
            let cfg = a.resolve()?;
            pipeline::ensure_dir(&cfg.out_dir)?;
            let data = pipeline::generate(&cfg)?;
            pipeline::write_data(&cfg.out_dir, &data)
        }
        Command::Train(a) => {
            let cfg = a.resolve()?;
            let dir = &cfg.out_dir;
            let tree = treefile::read_tree(&dir.join(TREE_FILE))?;
            let data = pipeline::read_data(&dir.join(TRAIN_FILE), cfg.ignore_label)?;
            let out = pipeline::train(&cfg, &data, tree.level_size(0))?;
            checkpoint::write_checkpoint(&dir.join(MODEL_FILE), &out.model, &cfg.ball)
        }
        Command::Eval(a) => {
            let cfg = a.resolve()?;
            let dir = &cfg.out_dir;
            let tree = treefile::read_tree(&dir.join(TREE_FILE))?;
            let ckpt = checkpoint::read_checkpoint(&dir.join(MODEL_FILE))?;
            let test = pipeline::read_data(&dir.join(TEST_FILE), cfg.ignore_label)?;
            let reports = pipeline::evaluate(&ckpt.model, &test, &tree, cfg.bins, cfg.cwece_norm)?;
            pipeline::write_metrics(dir, &reports, &tree)
        }
        Command::Analyze(a) => {
            let cfg = a.resolve()?;
            let dir = &cfg.out_dir;
            let ckpt = checkpoint::read_checkpoint(&dir.join(MODEL_FILE))?;
            let test = pipeline::read_data(&dir.join(TEST_FILE), cfg.ignore_label)?;
            let report = pipeline::analyze(&ckpt.model, &test, cfg.pair_cap, cfg.seed)?;
            info!("writing {ANALYSIS_FILE}");
            write_json(&dir.join(ANALYSIS_FILE), &report)
        }
    }
}
