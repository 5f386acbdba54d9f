//! Feature encoding: raw string columns → standardized numeric matrix.
//!
//! A [`FeatureSpec`] is fitted on the source-side training rows only and then
//! applied unchanged to validation and target rows, mirroring how statistics
//! must be collected in deployment (the target domain is never peeked at).

use super::raw::{label_column, sensitive_column, DatasetId, RawTable};
use super::splits::SplitId;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How one raw column enters the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Parsed as a number, standardized to zero mean / unit variance.
    Numeric,
    /// One indicator feature per vocabulary value.
    Categorical,
    /// Excluded from the feature matrix.
    Dropped,
    /// Becomes the binary attribute a (and is excluded from features).
    Sensitive,
    /// Becomes the binary label y.
    Label,
}

/// Fixed per-dataset column roles. `fnlwgt` is a census sampling weight, not
/// a personal feature; `education` duplicates `education_num`.
pub fn roles(dataset: DatasetId) -> Vec<(&'static str, Role)> {
    use Role::*;
    match dataset {
        DatasetId::Adult => vec![
            ("age", Numeric),
            ("workclass", Categorical),
            ("fnlwgt", Dropped),
            ("education", Dropped),
            ("education_num", Numeric),
            ("marital_status", Categorical),
            ("occupation", Categorical),
            ("relationship", Categorical),
            ("race", Categorical),
            ("sex", Sensitive),
            ("capital_gain", Numeric),
            ("capital_loss", Numeric),
            ("hours_per_week", Numeric),
            ("native_country", Categorical),
            ("income", Label),
        ],
        DatasetId::German => vec![
            ("checking_status", Categorical),
            ("duration", Numeric),
            ("credit_history", Categorical),
            ("purpose", Categorical),
            ("credit_amount", Numeric),
            ("savings", Categorical),
            ("employment", Categorical),
            ("installment_rate", Numeric),
            ("personal_status", Sensitive),
            ("debtors", Categorical),
            ("residence", Numeric),
            ("property", Categorical),
            ("age", Numeric),
            ("other_plans", Categorical),
            ("housing", Categorical),
            ("existing_credits", Numeric),
            ("job", Categorical),
            ("num_maintained", Numeric),
            ("telephone", Categorical),
            ("foreign_worker", Categorical),
            ("class", Label),
        ],
        DatasetId::Compas => vec![
            ("age", Numeric),
            ("c_charge_degree", Categorical),
            ("race", Categorical),
            ("sex", Sensitive),
            ("priors_count", Numeric),
            ("juv_fel_count", Numeric),
            ("juv_misd_count", Numeric),
            ("juv_other_count", Numeric),
            ("two_year_recid", Label),
        ],
    }
}

#[derive(Clone, Debug)]
enum ColumnEncoder {
    /// (x − mean) / std with population std; zero-variance columns encode
    /// as a constant 0.
    Standardize { col: usize, name: String, mean: f64, std: f64 },
    /// Indicators for each fitted vocabulary value, in sorted order; a value
    /// unseen during fitting encodes as all zeros.
    OneHot { col: usize, name: String, vocab: Vec<String> },
}

impl ColumnEncoder {
    fn width(&self) -> usize {
        match self {
            ColumnEncoder::Standardize { .. } => 1,
            ColumnEncoder::OneHot { vocab, .. } => vocab.len(),
        }
    }
}

/// A fitted encoder: which columns are active, their normalization constants
/// and vocabularies. Immutable after `fit`.
#[derive(Clone, Debug)]
pub struct FeatureSpec {
    dataset: DatasetId,
    label_col: usize,
    sensitive_col: usize,
    encoders: Vec<ColumnEncoder>,
    n_features: usize,
    pub warnings: Vec<String>,
}

impl FeatureSpec {
    /// Fit normalization statistics and vocabularies on `rows` (the source
    /// training rows). Columns named in the split's predicates are excluded.
    pub fn fit(table: &RawTable, rows: &[usize], split: SplitId) -> Result<FeatureSpec> {
        assert!(!rows.is_empty(), "cannot fit an encoder on zero rows");
        let excluded = split.predicate_columns();
        let mut encoders = Vec::new();
        let mut warnings = Vec::new();
        for (name, role) in roles(table.dataset) {
            if excluded.contains(&name) {
                continue;
            }
            let col = table.col(name);
            match role {
                Role::Dropped | Role::Sensitive | Role::Label => {}
                Role::Numeric => {
                    let mut sum = 0.0;
                    let mut sum2 = 0.0;
                    for &r in rows {
                        let v = parse_cell(table, r, col, name)?;
                        sum += v;
                        sum2 += v * v;
                    }
                    let n = rows.len() as f64;
                    let mean = sum / n;
                    let var = (sum2 / n - mean * mean).max(0.0);
                    let std = var.sqrt();
                    if std == 0.0 {
                        warnings.push(format!(
                            "column '{name}' is constant on the fitted rows; encoding as 0"
                        ));
                    }
                    encoders.push(ColumnEncoder::Standardize {
                        col,
                        name: name.to_string(),
                        mean,
                        std,
                    });
                }
                Role::Categorical => {
                    let mut vocab: Vec<String> =
                        rows.iter().map(|&r| table.value(r, col).to_string()).collect();
                    vocab.sort_unstable();
                    vocab.dedup();
                    encoders.push(ColumnEncoder::OneHot { col, name: name.to_string(), vocab });
                }
            }
        }
        let n_features = encoders.iter().map(ColumnEncoder::width).sum();
        assert!(n_features > 0, "no features left after exclusions");
        Ok(FeatureSpec {
            dataset: table.dataset,
            label_col: table.col(label_column(table.dataset)),
            sensitive_col: table.col(sensitive_column(table.dataset)),
            encoders,
            n_features,
            warnings,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// One name per feature column, e.g. `age` or `race=White`.
    pub fn feature_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.n_features);
        for enc in &self.encoders {
            match enc {
                ColumnEncoder::Standardize { name, .. } => out.push(name.clone()),
                ColumnEncoder::OneHot { name, vocab, .. } => {
                    out.extend(vocab.iter().map(|v| format!("{name}={v}")));
                }
            }
        }
        out
    }

    /// Encode the given rows into a feature matrix plus attribute and label
    /// vectors. The label vector is wrapped in a read-counting guard.
    pub fn transform<S: Scalar>(&self, table: &RawTable, rows: &[usize]) -> Result<DomainDataset<S>> {
        assert_eq!(
            table.dataset, self.dataset,
            "encoder fitted on {} applied to {}",
            self.dataset, table.dataset
        );
        let mut x = Tensor::zeros(rows.len(), self.n_features);
        let mut a = Vec::with_capacity(rows.len());
        let mut y = Vec::with_capacity(rows.len());
        for (out_r, &r) in rows.iter().enumerate() {
            let mut c = 0usize;
            for enc in &self.encoders {
                match enc {
                    ColumnEncoder::Standardize { col, name, mean, std } => {
                        let v = parse_cell(table, r, *col, name)?;
                        let z = if *std == 0.0 { 0.0 } else { (v - mean) / std };
                        x.set(out_r, c, S::c(z));
                        c += 1;
                    }
                    ColumnEncoder::OneHot { col, vocab, .. } => {
                        let v = table.value(r, *col);
                        if let Ok(i) = vocab.binary_search_by(|p| p.as_str().cmp(v)) {
                            x.set(out_r, c + i, S::one());
                        }
                        c += vocab.len();
                    }
                }
            }
            debug_assert_eq!(c, self.n_features);
            a.push(infer_sensitive(table, r, self.sensitive_col));
            y.push(infer_label(table, r, self.label_col));
        }
        Ok(DomainDataset { x, a, labels: GuardedLabels::new(y) })
    }
}

fn parse_cell(table: &RawTable, row: usize, col: usize, name: &str) -> Result<f64> {
    table.value(row, col).parse::<f64>().map_err(|_| Error::Schema {
        dataset: table.dataset.name(),
        msg: format!("column '{name}': cannot parse '{}' as a number", table.value(row, col)),
    })
}

fn infer_label(table: &RawTable, row: usize, col: usize) -> u8 {
    debug_assert_eq!(col, table.col(label_column(table.dataset)));
    table.label(row)
}

fn infer_sensitive(table: &RawTable, row: usize, col: usize) -> u8 {
    debug_assert_eq!(col, table.col(sensitive_column(table.dataset)));
    table.sensitive(row)
}

pub use super::guard::GuardedLabels;

/// One side of an experiment, encoded: feature matrix, binary attribute,
/// and guarded binary labels.
#[derive(Clone, Debug)]
pub struct DomainDataset<S: Scalar> {
    pub x: Tensor<S>,
    pub a: Vec<u8>,
    pub labels: GuardedLabels,
}

impl<S: Scalar> DomainDataset<S> {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }
}
