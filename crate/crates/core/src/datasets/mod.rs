//! Dataset ingestion, feature encoding, and source/target split machinery.

pub mod encode;
mod guard;
pub mod raw;
pub mod splits;

pub use encode::{DomainDataset, FeatureSpec, Role};
pub use guard::GuardedLabels;
pub use raw::{load_dataset, DatasetId, RawTable};
pub use splits::{
    apply_split, random_split_indices, side_stats, split_stats, SideStats, SplitId,
    DEFAULT_SPLIT_SEED, RANDOM_SOURCE_FRACTION,
};

use crate::error::Result;
use crate::rng;
use crate::scalar::Scalar;
use rand::Rng;

/// Everything a training run consumes: encoded source train/val sides and
/// the encoded target side, plus the encoder that produced them.
#[derive(Clone, Debug)]
pub struct Experiment<S: Scalar> {
    pub train: DomainDataset<S>,
    pub val: DomainDataset<S>,
    pub target: DomainDataset<S>,
    pub spec: FeatureSpec,
}

/// Split source rows into (train, val) by a seeded shuffle; val gets
/// ⌊val_fraction·n⌋ rows (at least 1), train the rest.
pub fn train_val_partition(
    rows: &[usize],
    val_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    assert!(
        (0.0..1.0).contains(&val_fraction),
        "val_fraction {val_fraction} outside [0, 1)"
    );
    assert!(rows.len() >= 2, "need at least 2 source rows to hold out validation data");
    let mut idx = rows.to_vec();
    let mut r = rng::stream(seed, "train-val", 0);
    for i in (1..idx.len()).rev() {
        let j = r.gen_range(0..=i);
        idx.swap(i, j);
    }
    let n_val = ((val_fraction * idx.len() as f64).floor() as usize).max(1);
    let mut val = idx.split_off(idx.len() - n_val);
    let mut train = idx;
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Build the encoded train/val/target datasets for one run: apply the split,
/// hold out validation rows from the source side, fit the encoder on the
/// remaining training rows only, and encode all three parts with it.
pub fn prepare_experiment<S: Scalar>(
    table: &RawTable,
    split: SplitId,
    split_seed: u64,
    val_fraction: f64,
    partition_seed: u64,
) -> Result<Experiment<S>> {
    let (src, tar) = apply_split(table, split, split_seed)?;
    let (train_rows, val_rows) = train_val_partition(&src, val_fraction, partition_seed);
    let spec = FeatureSpec::fit(table, &train_rows, split)?;
    Ok(Experiment {
        train: spec.transform(table, &train_rows)?,
        val: spec.transform(table, &val_rows)?,
        target: spec.transform(table, &tar)?,
        spec,
    })
}
