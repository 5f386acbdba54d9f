//! Experiment configuration: a TOML file plus command-line overrides, with
//! the flags winning. The resolved form is written back into the output
//! directory so every artifact can be regenerated from it.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use fairadapt_core::autodiff::CostOrder;
use fairadapt_core::datasets::{DatasetId, SplitId};
use fairadapt_core::trainer::{Ablation, TrainConfig};
use fairadapt_core::{Error, Result};

/// On-disk shape: everything optional so a file can pin only what it cares
/// about.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: Option<String>,
    pub split: Option<String>,
    pub ablation: Option<String>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub itr: Option<usize>,
    pub fair_start: Option<usize>,
    pub thresh: Option<usize>,
    pub lr_main: Option<f64>,
    pub lr_swd: Option<f64>,
    pub batch_size: Option<usize>,
    pub k: Option<usize>,
    pub eval_every: Option<usize>,
    pub optimizer: Option<String>,
    pub latent: Option<usize>,
    pub activation: Option<String>,
    pub swd_cost: Option<String>,
    pub val_fraction: Option<f64>,
    pub split_seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub freeze_audit: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Command-line overrides (a subset of the file's keys).
#[derive(Debug, Default)]
pub struct Overrides {
    pub dataset: Option<String>,
    pub split: Option<String>,
    pub ablation: Option<String>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
}

/// Fully resolved experiment: what `run` executes and what gets persisted.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetId,
    pub split: SplitId,
    pub runs: usize,
    pub out: PathBuf,
    pub data_dir: PathBuf,
    pub train: TrainConfig,
}

fn parse_cost(s: &str) -> Result<CostOrder> {
    match s {
        "squared" => Ok(CostOrder::Squared),
        "absolute" => Ok(CostOrder::Absolute),
        other => Err(Error::Config(format!(
            "unknown swd_cost '{other}' (expected squared|absolute)"
        ))),
    }
}

pub fn resolve(file: ConfigFile, flags: Overrides) -> Result<ExperimentConfig> {
    let pick = |flag: Option<String>, filed: Option<String>| flag.or(filed);

    let dataset = pick(flags.dataset, file.dataset)
        .ok_or_else(|| Error::Usage("missing --dataset (or 'dataset' in the config file)".into()))?
        .parse::<DatasetId>()?;
    let split = pick(flags.split, file.split)
        .map(|s| s.parse::<SplitId>())
        .transpose()?
        .unwrap_or(SplitId::Random);
    if !split.valid_for(dataset) {
        return Err(Error::Usage(format!(
            "split {split} does not belong to dataset {dataset}"
        )));
    }

    let mut train = TrainConfig::default();
    let t = file.train;
    if let Some(v) = t.itr {
        train.itr = v;
    }
    if let Some(v) = t.fair_start {
        train.fair_start = v;
    }
    if let Some(v) = t.thresh {
        train.thresh = v;
    }
    if let Some(v) = t.lr_main {
        train.lr_main = v;
    }
    if let Some(v) = t.lr_swd {
        train.lr_swd = v;
    }
    if let Some(v) = t.batch_size {
        train.batch_size = v;
    }
    if let Some(v) = t.k {
        train.k = v;
    }
    if let Some(v) = t.eval_every {
        train.eval_every = v;
    }
    if let Some(v) = t.optimizer {
        train.optimizer = v.parse().map_err(Error::Config)?;
    }
    if let Some(v) = t.latent {
        train.latent = v;
    }
    if let Some(v) = t.activation {
        train.activation = v.parse().map_err(Error::Config)?;
    }
    if let Some(v) = t.swd_cost {
        train.swd_cost = parse_cost(&v)?;
    }
    if let Some(v) = t.val_fraction {
        train.val_fraction = v;
    }
    if let Some(v) = t.split_seed {
        train.split_seed = v;
    }
    if let Some(v) = t.alpha {
        train.weights.alpha = v;
    }
    if let Some(v) = t.beta {
        train.weights.beta = v;
    }
    if let Some(v) = t.gamma {
        train.weights.gamma = v;
    }
    if let Some(v) = t.freeze_audit {
        train.freeze_audit = v;
    }
    train.ablation = pick(flags.ablation, file.ablation)
        .map(|s| s.parse::<Ablation>())
        .transpose()?
        .unwrap_or_default();
    train.seed = flags.seed.or(file.seed).unwrap_or(0);
    train.validate()?;

    Ok(ExperimentConfig {
        dataset,
        split,
        runs: flags.runs.or(file.runs).unwrap_or(7),
        out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("runs/experiment")),
        data_dir: flags.data_dir.or(file.data_dir).unwrap_or_else(|| PathBuf::from("data")),
        train,
    })
}

impl ExperimentConfig {
    /// Serialize the resolved configuration back to TOML (every key pinned).
    pub fn to_toml(&self) -> String {
        let t = &self.train;
        let cost = match t.swd_cost {
            CostOrder::Squared => "squared",
            CostOrder::Absolute => "absolute",
        };
        let optim = match t.optimizer {
            fairadapt_core::autodiff::OptimKind::Adam => "adam",
            fairadapt_core::autodiff::OptimKind::Sgd => "sgd",
        };
        let act = match t.activation {
            fairadapt_core::model::Activation::Relu => "relu",
            fairadapt_core::model::Activation::Identity => "identity",
        };
        format!(
            "dataset = \"{}\"\nsplit = \"{}\"\nablation = \"{}\"\nruns = {}\nseed = {}\n\
             out = \"{}\"\ndata_dir = \"{}\"\n\n[train]\nitr = {}\nfair_start = {}\n\
             thresh = {}\nlr_main = {}\nlr_swd = {}\nbatch_size = {}\nk = {}\n\
             eval_every = {}\noptimizer = \"{}\"\nlatent = {}\nactivation = \"{}\"\n\
             swd_cost = \"{}\"\nval_fraction = {}\nsplit_seed = {}\nalpha = {}\n\
             beta = {}\ngamma = {}\nfreeze_audit = {}\n",
            self.dataset,
            self.split,
            t.ablation,
            self.runs,
            t.seed,
            self.out.display(),
            self.data_dir.display(),
            t.itr,
            t.fair_start,
            t.thresh,
            t.lr_main,
            t.lr_swd,
            t.batch_size,
            t.k,
            t.eval_every,
            optim,
            t.latent,
            act,
            cost,
            t.val_fraction,
            t.split_seed,
            t.weights.alpha,
            t.weights.beta,
            t.weights.gamma,
            t.freeze_audit,
        )
    }
}
