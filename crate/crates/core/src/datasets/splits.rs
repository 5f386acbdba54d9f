//! Source/target split construction: nine fixed domain-shift splits (three
//! per dataset) plus seeded random 70/30 splits, and the per-side summary
//! statistics used to sanity-check them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::raw::{DatasetId, RawTable};
use crate::error::{Error, Result};
use crate::rng;

/// Fraction of rows assigned to the source side of a random split.
pub const RANDOM_SOURCE_FRACTION: f64 = 0.7;

/// Seed for the shared random splits; fixed so that split statistics are
/// stable across runs and machines. See `SideStats` tests for the regression
/// values this seed reproduces.
pub const DEFAULT_SPLIT_SEED: u64 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitId {
    Random,
    A1,
    A2,
    A3,
    C1,
    C2,
    C3,
    G1,
    G2,
    G3,
}

impl SplitId {
    /// The dataset a custom split belongs to; `None` for `Random`, which is
    /// valid everywhere.
    pub fn dataset(self) -> Option<DatasetId> {
        match self {
            SplitId::Random => None,
            SplitId::A1 | SplitId::A2 | SplitId::A3 => Some(DatasetId::Adult),
            SplitId::C1 | SplitId::C2 | SplitId::C3 => Some(DatasetId::Compas),
            SplitId::G1 | SplitId::G2 | SplitId::G3 => Some(DatasetId::German),
        }
    }

    pub fn valid_for(self, dataset: DatasetId) -> bool {
        self.dataset().map_or(true, |d| d == dataset)
    }

    pub fn all_for(dataset: DatasetId) -> Vec<SplitId> {
        let customs = match dataset {
            DatasetId::Adult => [SplitId::A1, SplitId::A2, SplitId::A3],
            DatasetId::Compas => [SplitId::C1, SplitId::C2, SplitId::C3],
            DatasetId::German => [SplitId::G1, SplitId::G2, SplitId::G3],
        };
        let mut out = vec![SplitId::Random];
        out.extend(customs);
        out
    }

    /// Raw columns referenced by this split's predicates. They are removed
    /// from the feature matrix: within each side they are constant or
    /// near-constant, so they carry side identity rather than signal.
    pub fn predicate_columns(self) -> &'static [&'static str] {
        match self {
            SplitId::Random => &[],
            SplitId::A1 => &["race", "education_num"],
            SplitId::A2 => &["race", "age"],
            SplitId::A3 => &["age", "education_num"],
            SplitId::C1 => &["age", "priors_count"],
            SplitId::C2 => &["age", "race", "priors_count"],
            SplitId::C3 => &["age", "race", "priors_count", "c_charge_degree"],
            SplitId::G1 => &["employment"],
            SplitId::G2 | SplitId::G3 => &["credit_history", "employment"],
        }
    }
}

impl fmt::Display for SplitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitId::Random => "random",
            SplitId::A1 => "A1",
            SplitId::A2 => "A2",
            SplitId::A3 => "A3",
            SplitId::C1 => "C1",
            SplitId::C2 => "C2",
            SplitId::C3 => "C3",
            SplitId::G1 => "G1",
            SplitId::G2 => "G2",
            SplitId::G3 => "G3",
        };
        f.write_str(s)
    }
}

impl FromStr for SplitId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RANDOM" => Ok(SplitId::Random),
            "A1" => Ok(SplitId::A1),
            "A2" => Ok(SplitId::A2),
            "A3" => Ok(SplitId::A3),
            "C1" => Ok(SplitId::C1),
            "C2" => Ok(SplitId::C2),
            "C3" => Ok(SplitId::C3),
            "G1" => Ok(SplitId::G1),
            "G2" => Ok(SplitId::G2),
            "G3" => Ok(SplitId::G3),
            other => Err(Error::Usage(format!(
                "unknown split '{other}' (expected random, A1-A3, C1-C3, or G1-G3)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Source,
    Target,
}

/// Which side a row falls on under a custom split, if any. Rows matching
/// neither predicate are excluded; the predicates never overlap.
fn side_of(table: &RawTable, split: SplitId, row: usize) -> Option<Side> {
    let num = |name: &str| table.numeric(row, name);
    let is = |name: &str, v: &str| table.value(row, table.col(name)) == v;
    let one_of = |name: &str, vs: &[&str]| vs.contains(&table.value(row, table.col(name)));

    let (src, tar) = match split {
        SplitId::Random => unreachable!("random splits are index-based"),
        SplitId::A1 => (
            is("race", "White") && num("education_num") >= 12.0,
            !is("race", "White") && num("education_num") < 12.0,
        ),
        SplitId::A2 => (
            is("race", "White") && num("age") >= 30.0,
            !is("race", "White") && num("age") < 30.0,
        ),
        SplitId::A3 => (
            num("age") < 70.0 && num("education_num") > 12.0,
            num("age") >= 70.0 && num("education_num") <= 12.0,
        ),
        SplitId::C1 => (num("age") < 45.0 && num("priors_count") <= 3.0, num("age") >= 45.0),
        SplitId::C2 => (
            num("age") < 45.0 && is("race", "Caucasian") && num("priors_count") >= 1.0,
            num("age") >= 45.0 && !is("race", "Caucasian") && num("priors_count") == 0.0,
        ),
        SplitId::C3 => (
            num("age") < 45.0
                && is("race", "Caucasian")
                && num("priors_count") >= 1.0
                && is("c_charge_degree", "M"),
            num("age") >= 45.0
                && !is("race", "Caucasian")
                && num("priors_count") == 0.0
                && is("c_charge_degree", "F"),
        ),
        SplitId::G1 => (
            one_of("employment", &["A71", "A72", "A73"]),
            one_of("employment", &["A74", "A75"]),
        ),
        SplitId::G2 => (
            one_of("credit_history", &["A30", "A31", "A32"])
                && one_of("employment", &["A71", "A72", "A73"]),
            one_of("credit_history", &["A33", "A34"])
                && one_of("employment", &["A74", "A75"]),
        ),
        SplitId::G3 => (
            one_of("credit_history", &["A30", "A31", "A32", "A33"])
                && one_of("employment", &["A71", "A72", "A73"]),
            is("credit_history", "A34") && one_of("employment", &["A74", "A75"]),
        ),
    };
    debug_assert!(!(src && tar), "split {split}: row {row} matches both sides");
    match (src, tar) {
        (true, _) => Some(Side::Source),
        (_, true) => Some(Side::Target),
        _ => None,
    }
}

/// Shuffle `0..n` with a seeded stream and take the first ⌊fraction·n⌋ rows
/// as the source side.
pub fn random_split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    assert!((0.0..=1.0).contains(&fraction), "fraction {fraction} outside [0, 1]");
    let mut idx: Vec<usize> = (0..n).collect();
    let mut r = rng::stream(seed, "random-split", 0);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = r.gen_range(0..=i);
        idx.swap(i, j);
    }
    let cut = (fraction * n as f64).floor() as usize;
    let target = idx.split_off(cut);
    (idx, target)
}

/// Row indices of the (source, target) sides. The seed only matters for
/// `SplitId::Random`; custom splits are deterministic row predicates.
pub fn apply_split(table: &RawTable, split: SplitId, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !split.valid_for(table.dataset) {
        return Err(Error::Split {
            id: split.to_string(),
            msg: format!("not defined for dataset '{}'", table.dataset),
        });
    }
    if split == SplitId::Random {
        return Ok(random_split_indices(table.len(), RANDOM_SOURCE_FRACTION, seed));
    }
    let mut source = Vec::new();
    let mut target = Vec::new();
    for row in 0..table.len() {
        match side_of(table, split, row) {
            Some(Side::Source) => source.push(row),
            Some(Side::Target) => target.push(row),
            None => {}
        }
    }
    if source.is_empty() || target.is_empty() {
        return Err(Error::Split {
            id: split.to_string(),
            msg: "a side matched no rows".to_string(),
        });
    }
    Ok((source, target))
}

/// Size and outcome/attribute composition of one side of a split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SideStats {
    pub size: usize,
    pub p_y0: f64,
    pub p_a0_given_y0: f64,
    pub p_a0_given_y1: f64,
}

impl SideStats {
    pub const CSV_HEADER: &'static str = "split_id,side,size,p_y0,p_a0_given_y0,p_a0_given_y1";

    pub fn csv_row(&self, split: SplitId, side: &str) -> String {
        format!(
            "{split},{side},{},{:.4},{:.4},{:.4}",
            self.size, self.p_y0, self.p_a0_given_y0, self.p_a0_given_y1
        )
    }
}

/// Composition of the given rows; conditional probabilities are NaN when the
/// conditioning label class is absent (never the case for the shipped splits).
pub fn side_stats(table: &RawTable, rows: &[usize]) -> SideStats {
    let mut n_y0 = 0usize;
    let mut n_a0_y0 = 0usize;
    let mut n_a0_y1 = 0usize;
    for &r in rows {
        let y = table.label(r);
        let a = table.sensitive(r);
        if y == 0 {
            n_y0 += 1;
            n_a0_y0 += usize::from(a == 0);
        } else {
            n_a0_y1 += usize::from(a == 0);
        }
    }
    let n = rows.len();
    let n_y1 = n - n_y0;
    let frac = |num: usize, den: usize| if den == 0 { f64::NAN } else { num as f64 / den as f64 };
    SideStats {
        size: n,
        p_y0: frac(n_y0, n),
        p_a0_given_y0: frac(n_a0_y0, n_y0),
        p_a0_given_y1: frac(n_a0_y1, n_y1),
    }
}

/// (source, target) stats for one split.
pub fn split_stats(table: &RawTable, split: SplitId, seed: u64) -> Result<(SideStats, SideStats)> {
    let (src, tar) = apply_split(table, split, seed)?;
    Ok((side_stats(table, &src), side_stats(table, &tar)))
}
