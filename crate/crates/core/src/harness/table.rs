//! Result tables and their CSV form.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stamp written to every row.
pub const VERSION: &str = concat!("thz-core ", env!("CARGO_PKG_VERSION"));

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// One aggregated `(experiment, estimator, snr, metric)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub estimator: String,
    pub snr_db: f64,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation over `√trials`.
    pub stderr: f64,
    /// Successful trials.
    pub trials: usize,
    pub failures: usize,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    /// Run parameters that are not per-row (calibrated step sizes etc.).
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(io_err)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "experiment",
                "estimator",
                "snr_db",
                "metric",
                "mean",
                "stderr",
                "trials",
                "failures",
                "seed",
                "version",
            ])
            .map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(io_err)?;
        String::from_utf8(bytes).map_err(io_err)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<ResultRow>, _>>()
            .map_err(io_err)?;
        Ok(Self {
            rows,
            metadata: BTreeMap::new(),
        })
    }

    /// Writes the CSV and, when there is metadata, `<path>.meta.json`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
        if !self.metadata.is_empty() {
            let mut meta = path.as_os_str().to_owned();
            meta.push(".meta.json");
            let text = serde_json::to_string_pretty(&self.metadata).map_err(io_err)?;
            std::fs::write(&meta, text + "\n").map_err(io_err)?;
        }
        Ok(())
    }

    pub fn find(&self, estimator: &str, snr_db: f64, metric: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.snr_db == snr_db && r.metric == metric)
    }

    /// Mean of a cell, `NaN` when absent.
    pub fn mean(&self, estimator: &str, snr_db: f64, metric: &str) -> f64 {
        self.find(estimator, snr_db, metric).map_or(f64::NAN, |r| r.mean)
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
        self.metadata.extend(other.metadata);
    }
}

/// One per-trial measurement; `Err` carries the failure message.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub estimator: String,
    pub snr_db: f64,
    pub metric: &'static str,
    pub value: std::result::Result<f64, String>,
}

impl Record {
    pub fn new(estimator: impl Into<String>, snr_db: f64, metric: &'static str, value: Result<f64>) -> Self {
        Self {
            estimator: estimator.into(),
            snr_db,
            metric,
            value: value.map_err(|e| e.to_string()),
        }
    }
}

/// Everything one trial measured.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub records: Vec<Record>,
}

impl TrialOutcome {
    pub fn value(&self, estimator: &str, snr_db: f64, metric: &str) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.estimator == estimator && r.snr_db == snr_db && r.metric == metric)
            .and_then(|r| r.value.as_ref().ok().copied())
    }
}

/// Folds trial outcomes (in the given order) into rows. Row order is the
/// order in which cells first appear.
pub fn aggregate(experiment: &str, seed: u64, outcomes: &[TrialOutcome]) -> Vec<ResultRow> {
    type Key = (String, u64, &'static str);
    let mut order: Vec<(Key, f64)> = Vec::new();
    let mut cells: HashMap<Key, (Vec<f64>, usize)> = HashMap::new();
    for outcome in outcomes {
        for rec in &outcome.records {
            let key = (rec.estimator.clone(), rec.snr_db.to_bits(), rec.metric);
            let cell = cells.entry(key.clone()).or_insert_with(|| {
                order.push((key, rec.snr_db));
                (Vec::new(), 0)
            });
            match &rec.value {
                Ok(v) if v.is_finite() => cell.0.push(*v),
                _ => cell.1 += 1,
            }
        }
    }
    order
        .into_iter()
        .map(|(key, snr_db)| {
            let (values, failures) = &cells[&key];
            let (mean, stderr) = mean_stderr(values);
            ResultRow {
                experiment: experiment.to_string(),
                estimator: key.0,
                snr_db,
                metric: key.2.to_string(),
                mean,
                stderr,
                trials: values.len(),
                failures: *failures,
                seed,
                version: VERSION.to_string(),
            }
        })
        .collect()
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
