//! Raw table ingestion for the three benchmark datasets, plus the binary
//! label / sensitive-attribute codings used everywhere downstream.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetId {
    Adult,
    Compas,
    German,
}

impl DatasetId {
    pub fn name(self) -> &'static str {
        match self {
            DatasetId::Adult => "adult",
            DatasetId::Compas => "compas",
            DatasetId::German => "german",
        }
    }

    /// File names expected inside the data directory.
    pub fn files(self) -> &'static [&'static str] {
        match self {
            DatasetId::Adult => &["adult.data", "adult.test"],
            DatasetId::Compas => &["compas-scores-two-years.csv"],
            DatasetId::German => &["german.data"],
        }
    }

    pub fn all() -> [DatasetId; 3] {
        [DatasetId::Adult, DatasetId::Compas, DatasetId::German]
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adult" => Ok(DatasetId::Adult),
            "compas" => Ok(DatasetId::Compas),
            "german" => Ok(DatasetId::German),
            other => Err(Error::Usage(format!(
                "unknown dataset '{other}' (expected adult, compas, or german)"
            ))),
        }
    }
}

/// A cleaned dataset held as strings, one `Vec<String>` per row, with named
/// columns. Encoding to numbers happens later against a fitted feature spec.
#[derive(Clone, Debug)]
pub struct RawTable {
    pub dataset: DatasetId,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn col(&self, name: &str) -> usize {
        self.columns
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("{}: no column named '{name}'", self.dataset))
    }

    pub fn value(&self, row: usize, col: usize) -> &str {
        &self.rows[row][col]
    }

    pub fn numeric(&self, row: usize, name: &str) -> f64 {
        let c = self.col(name);
        parse_numeric(self.dataset, name, &self.rows[row][c])
            .unwrap_or_else(|e| panic!("{e}"))
    }

    /// y ∈ {0, 1}: the prediction problem (see the per-dataset coding notes).
    pub fn label(&self, row: usize) -> u8 {
        let c = self.col(label_column(self.dataset));
        match self.dataset {
            DatasetId::Adult => u8::from(self.rows[row][c] == ">50K"),
            DatasetId::Compas => u8::from(self.rows[row][c] == "1"),
            DatasetId::German => u8::from(self.rows[row][c] == "2"),
        }
    }

    /// a ∈ {0, 1} with a = 0 for the group that Table-style conditionals
    /// P(A=0|Y) track: Female for adult, Male for compas, female status codes
    /// for german.
    pub fn sensitive(&self, row: usize) -> u8 {
        let c = self.col(sensitive_column(self.dataset));
        let v = self.rows[row][c].as_str();
        match self.dataset {
            DatasetId::Adult => u8::from(v != "Female"),
            DatasetId::Compas => u8::from(v != "Male"),
            DatasetId::German => u8::from(!matches!(v, "A92" | "A95")),
        }
    }
}

pub fn label_column(dataset: DatasetId) -> &'static str {
    match dataset {
        DatasetId::Adult => "income",
        DatasetId::Compas => "two_year_recid",
        DatasetId::German => "class",
    }
}

pub fn sensitive_column(dataset: DatasetId) -> &'static str {
    match dataset {
        DatasetId::Adult => "sex",
        DatasetId::Compas => "sex",
        DatasetId::German => "personal_status",
    }
}

fn parse_numeric(dataset: DatasetId, col: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| Error::Schema {
        dataset: dataset.name(),
        msg: format!("column '{col}': cannot parse '{v}' as a number"),
    })
}

pub const ADULT_COLUMNS: [&str; 15] = [
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education_num",
    "marital_status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital_gain",
    "capital_loss",
    "hours_per_week",
    "native_country",
    "income",
];

pub const GERMAN_COLUMNS: [&str; 21] = [
    "checking_status",
    "duration",
    "credit_history",
    "purpose",
    "credit_amount",
    "savings",
    "employment",
    "installment_rate",
    "personal_status",
    "debtors",
    "residence",
    "property",
    "age",
    "other_plans",
    "housing",
    "existing_credits",
    "job",
    "num_maintained",
    "telephone",
    "foreign_worker",
    "class",
];

pub const COMPAS_COLUMNS: [&str; 9] = [
    "age",
    "c_charge_degree",
    "race",
    "sex",
    "priors_count",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
    "two_year_recid",
];

/// Load and clean one dataset from `data_dir`. Missing files surface as
/// [`Error::Io`]; malformed content as [`Error::Schema`].
pub fn load_dataset(id: DatasetId, data_dir: &Path) -> Result<RawTable> {
    match id {
        DatasetId::Adult => load_adult(data_dir),
        DatasetId::Compas => load_compas(data_dir),
        DatasetId::German => load_german(data_dir),
    }
}

fn load_adult(dir: &Path) -> Result<RawTable> {
    let mut rows = Vec::new();
    for file in DatasetId::Adult.files() {
        let path = dir.join(file);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        for line in text.lines() {
            let line = line.trim();
            // adult.test opens with a '|'-prefixed banner line
            if line.is_empty() || line.starts_with('|') {
                continue;
            }
            let mut fields: Vec<String> =
                line.split(',').map(|f| f.trim().to_string()).collect();
            if fields.len() != ADULT_COLUMNS.len() {
                return Err(Error::Schema {
                    dataset: "adult",
                    msg: format!(
                        "{file}: expected {} fields, got {} in line '{line}'",
                        ADULT_COLUMNS.len(),
                        fields.len()
                    ),
                });
            }
            // adult.test income labels carry a trailing period
            if let Some(last) = fields.last_mut() {
                if let Some(stripped) = last.strip_suffix('.') {
                    *last = stripped.to_string();
                }
            }
            rows.push(fields);
        }
    }
    let columns = ADULT_COLUMNS.iter().map(|c| c.to_string()).collect();
    validate_labels(DatasetId::Adult, &columns, &rows, &[">50K", "<=50K"])?;
    Ok(RawTable { dataset: DatasetId::Adult, columns, rows })
}

fn load_german(dir: &Path) -> Result<RawTable> {
    let path = dir.join(DatasetId::German.files()[0]);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if fields.len() != GERMAN_COLUMNS.len() {
            return Err(Error::Schema {
                dataset: "german",
                msg: format!(
                    "expected {} fields, got {} in line '{line}'",
                    GERMAN_COLUMNS.len(),
                    fields.len()
                ),
            });
        }
        rows.push(fields);
    }
    let columns = GERMAN_COLUMNS.iter().map(|c| c.to_string()).collect();
    validate_labels(DatasetId::German, &columns, &rows, &["1", "2"])?;
    Ok(RawTable { dataset: DatasetId::German, columns, rows })
}

/// The standard recidivism-study row filter: valid screening window,
/// known recidivism outcome, ordinary-traffic charges removed, scored rows
/// only, restricted to the two largest race groups.
fn load_compas(dir: &Path) -> Result<RawTable> {
    let path = dir.join(DatasetId::Compas.files()[0]);
    let mut reader = csv::Reader::from_path(&path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => {
            Error::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()))
        }
        _ => Error::Schema { dataset: "compas", msg: e.to_string() },
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema { dataset: "compas", msg: e.to_string() })?
        .clone();
    let idx = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Schema {
            dataset: "compas",
            msg: format!("missing column '{name}'"),
        })
    };
    let kept: Vec<usize> = COMPAS_COLUMNS.iter().map(|c| idx(c)).collect::<Result<_>>()?;
    let days = idx("days_b_screening_arrest")?;
    let is_recid = idx("is_recid")?;
    let score_text = idx("score_text")?;
    let degree = idx("c_charge_degree")?;
    let race = idx("race")?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::Schema { dataset: "compas", msg: e.to_string() })?;
        let days_v: f64 = match record.get(days).unwrap_or("").parse() {
            Ok(v) => v,
            Err(_) => continue, // empty screening gap: excluded
        };
        if !(-30.0..=30.0).contains(&days_v) {
            continue;
        }
        if record.get(is_recid) == Some("-1") {
            continue;
        }
        if record.get(degree) == Some("O") {
            continue;
        }
        if record.get(score_text) == Some("N/A") {
            continue;
        }
        if !matches!(record.get(race), Some("African-American") | Some("Caucasian")) {
            continue;
        }
        rows.push(kept.iter().map(|&i| record.get(i).unwrap_or("").to_string()).collect());
    }
    let columns = COMPAS_COLUMNS.iter().map(|c| c.to_string()).collect();
    validate_labels(DatasetId::Compas, &columns, &rows, &["0", "1"])?;
    Ok(RawTable { dataset: DatasetId::Compas, columns, rows })
}

fn validate_labels(
    dataset: DatasetId,
    columns: &Vec<String>,
    rows: &[Vec<String>],
    allowed: &[&str],
) -> Result<()> {
    let c = columns
        .iter()
        .position(|c| c == label_column(dataset))
        .expect("label column present by construction");
    for row in rows {
        if !allowed.contains(&row[c].as_str()) {
            return Err(Error::Schema {
                dataset: dataset.name(),
                msg: format!("unexpected label value '{}'", row[c]),
            });
        }
    }
    Ok(())
}
