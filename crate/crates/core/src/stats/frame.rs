//! Tabular analysis input and design-matrix construction.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Large,
}

impl SizeClass {
    /// 0/1 coding used in designs (`large` = 1).
    pub fn code(self) -> f64 {
        match self {
            SizeClass::Small => 0.0,
            SizeClass::Large => 1.0,
        }
    }
}

/// One (language, model) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    /// Hallucination rate in percent.
    pub rate: f64,
    pub size_class: SizeClass,
    pub n_supported_langs: f64,
    pub mean_response_len: f64,
    pub language: String,
    pub model_id: String,
}

pub const FRAME_COLUMNS: [&str; 6] = [
    "rate",
    "size_class",
    "n_supported_langs",
    "mean_response_len",
    "language",
    "model_id",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisFrame {
    pub rows: Vec<FrameRow>,
}

impl AnalysisFrame {
    pub fn new(rows: Vec<FrameRow>) -> Result<Self, StatsError> {
        let frame = Self { rows };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.rows.len() < 2 {
            return Err(StatsError::Frame(format!(
                "need at least 2 rows, got {}",
                self.rows.len()
            )));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !(r.rate.is_finite() && r.n_supported_langs.is_finite() && r.mean_response_len.is_finite()) {
                return Err(StatsError::Frame(format!("row {} has a non-finite value", i + 1)));
            }
        }
        Ok(())
    }

    /// Reads a CSV whose header names every frame column.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, StatsError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| StatsError::Frame(e.to_string()))?
            .clone();
        for col in FRAME_COLUMNS {
            if !headers.iter().any(|h| h == col) {
                return Err(StatsError::Frame(format!("missing column `{col}`")));
            }
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<FrameRow>().enumerate() {
            // Header is line 1.
            rows.push(rec.map_err(|e| StatsError::Frame(format!("line {}: {e}", i + 2)))?);
        }
        Self::new(rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, StatsError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| StatsError::Frame(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("UTF-8 CSV")
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rate).collect()
    }

    /// Raw (uncoded) values of a predictor.
    pub fn predictor(&self, p: Predictor) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match p {
                Predictor::Size => r.size_class.code(),
                Predictor::LanguageSupport => r.n_supported_langs,
                Predictor::ResponseLength => r.mean_response_len,
            })
            .collect()
    }
}

/// Fixed-effect predictors available in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Predictor {
    #[serde(rename = "size_class")]
    Size,
    #[serde(rename = "n_supported_langs")]
    LanguageSupport,
    #[serde(rename = "mean_response_len")]
    ResponseLength,
}

impl Predictor {
    pub const ALL: [Predictor; 3] = [
        Predictor::Size,
        Predictor::LanguageSupport,
        Predictor::ResponseLength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predictor::Size => "size_class",
            Predictor::LanguageSupport => "n_supported_langs",
            Predictor::ResponseLength => "mean_response_len",
        }
    }

    /// Binary predictors stay 0/1; continuous ones are z-scored.
    fn standardized(self) -> bool {
        !matches!(self, Predictor::Size)
    }
}

impl FromStr for Predictor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Predictor::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown predictor `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    #[default]
    Language,
    ModelId,
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "language" => Ok(GroupBy::Language),
            "model_id" | "model" => Ok(GroupBy::ModelId),
            other => Err(format!("unknown grouping column `{other}` (expected language|model_id)")),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupBy::Language => "language",
            GroupBy::ModelId => "model_id",
        })
    }
}

/// Fixed-effect structure: main effects, optionally with all two-way
/// interactions between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedSpec {
    pub predictors: Vec<Predictor>,
    pub interactions: bool,
}

impl FixedSpec {
    pub fn main_effects() -> Self {
        Self {
            predictors: Predictor::ALL.to_vec(),
            interactions: false,
        }
    }

    pub fn with_interactions() -> Self {
        Self {
            predictors: Predictor::ALL.to_vec(),
            interactions: true,
        }
    }
}

/// Response, fixed-effect design and group membership for a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Group index of each row, into `group_labels`.
    pub groups: Vec<usize>,
    pub group_labels: Vec<String>,
}

fn zscore(values: &[f64], name: &str) -> Result<Vec<f64>, StatsError> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return Err(StatsError::SingularDesign(format!("predictor `{name}` is constant")));
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Builds the design: intercept, coded predictors (z-scored continuous,
/// 0/1 size class), then pairwise products when interactions are on.
pub fn build_design(frame: &AnalysisFrame, spec: &FixedSpec, group_by: GroupBy) -> Result<Design, StatsError> {
    frame.validate()?;
    let n = frame.rows.len();
    let mut names = vec!["(Intercept)".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut coded = Vec::new();
    for &p in &spec.predictors {
        let raw = frame.predictor(p);
        let col = if p.standardized() { zscore(&raw, p.name())? } else { raw };
        names.push(p.name().to_string());
        coded.push((p, col.clone()));
        columns.push(col);
    }
    if spec.interactions {
        for i in 0..coded.len() {
            for j in i + 1..coded.len() {
                names.push(format!("{}:{}", coded[i].0.name(), coded[j].0.name()));
                columns.push(coded[i].1.iter().zip(&coded[j].1).map(|(a, b)| a * b).collect());
            }
        }
    }
    let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let y = DVector::from_vec(frame.rates());

    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut group_labels = Vec::new();
    let groups = frame
        .rows
        .iter()
        .map(|r| {
            let key = match group_by {
                GroupBy::Language => r.language.as_str(),
                GroupBy::ModelId => r.model_id.as_str(),
            };
            *index.entry(key).or_insert_with(|| {
                group_labels.push(key.to_string());
                group_labels.len() - 1
            })
        })
        .collect();
    Ok(Design {
        names,
        x,
        y,
        groups,
        group_labels,
    })
}
