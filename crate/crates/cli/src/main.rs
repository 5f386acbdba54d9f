//! `fairadapt` — train a fair classifier on an annotated source domain and
//! adapt it to an unannotated target domain.
//!
//! Subcommands: fetch the datasets, print split statistics, run repeated
//! training experiments, and export latent embeddings of a checkpoint.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairadapt_core::datasets::{DatasetId, SplitId, DEFAULT_SPLIT_SEED};

mod config;
mod fetch;
mod outputs;

use config::{ConfigFile, Overrides};

#[derive(Parser)]
#[command(name = "fairadapt", version, about = "Fairness-preserving domain adaptation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default)]
struct CommonFlags {
    /// Dataset id: adult, compas, or german.
    #[arg(long)]
    dataset: Option<String>,
    /// Split id: random (default), A1-A3, C1-C3, or G1-G3.
    #[arg(long)]
    split: Option<String>,
    /// Loss subset: base, swd_only, fair_only, or full.
    #[arg(long)]
    ablation: Option<String>,
    /// Number of repeated runs (seeds seed, seed+1, ...).
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (run) or file (export-embeddings).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory holding the dataset files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Download the three datasets and write a provenance manifest.
    Fetch {
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
    /// Print source/target composition of a split as CSV.
    Stats {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Train repeated runs and write curves, checkpoints, and reports.
    Run {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Encode source and target through a checkpoint and dump the latents.
    ExportEmbeddings {
        /// Path to a checkpoint.bin produced by `run`.
        checkpoint: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
}

fn resolve(flags: CommonFlags) -> fairadapt_core::Result<config::ExperimentConfig> {
    let file = match &flags.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    config::resolve(
        file,
        Overrides {
            dataset: flags.dataset,
            split: flags.split,
            ablation: flags.ablation,
            runs: flags.runs,
            seed: flags.seed,
            out: flags.out,
            data_dir: flags.data_dir,
        },
    )
}

fn real_main() -> fairadapt_core::Result<()> {
    match Cli::parse().cmd {
        Cmd::Fetch { data_dir } => {
            let downloaded = fetch::cmd_fetch(&data_dir)?;
            if downloaded.is_empty() {
                println!("all dataset files already present; manifest refreshed");
            } else {
                for p in downloaded {
                    println!("downloaded {}", p.display());
                }
            }
        }
        Cmd::Stats { flags } => {
            // stats has no training config; only dataset/split/data matter
            let dataset: DatasetId = flags
                .dataset
                .as_deref()
                .ok_or_else(|| fairadapt_core::Error::Usage("missing --dataset".into()))?
                .parse()?;
            let split: SplitId =
                flags.split.as_deref().map(str::parse).transpose()?.unwrap_or(SplitId::Random);
            let data_dir = flags.data_dir.unwrap_or_else(|| PathBuf::from("data"));
            let seed = flags.seed.unwrap_or(DEFAULT_SPLIT_SEED);
            print!("{}", outputs::cmd_stats(dataset, split, &data_dir, seed)?);
        }
        Cmd::Run { flags } => {
            let cfg = resolve(flags)?;
            let summary = outputs::cmd_run(&cfg)?;
            print!("{summary}");
            println!("artifacts in {}", cfg.out.display());
        }
        Cmd::ExportEmbeddings { checkpoint, flags } => {
            let out = flags.out.clone().unwrap_or_else(|| PathBuf::from("embeddings.csv"));
            let cfg = resolve(flags)?;
            let path = outputs::cmd_export_embeddings(&cfg, &checkpoint, &out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
