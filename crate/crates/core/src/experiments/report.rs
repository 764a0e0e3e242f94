use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::corruption::LabelCorruptionSummary;
use super::imitation::ImitationSummary;
use super::phase::PhaseSweepSummary;
use super::roundtrip::RoundTripSummary;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON of the resolved config.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn of<T: Serialize>(config: &T, seed: u64) -> Result<Self> {
        Ok(Provenance { config_hash: config_hash(config)?, seed, version: env!("CARGO_PKG_VERSION").to_string() })
    }
}

pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config).map_err(|e| Error::Config(e.to_string()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Summary {
    PhaseSweep(PhaseSweepSummary),
    Imitation(ImitationSummary),
    RoundTrip(RoundTripSummary),
    LabelCorruption(LabelCorruptionSummary),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub summary: Summary,
    /// File names of the series tables written next to the report.
    pub series: Vec<String>,
}

/// A named numeric table, written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SeriesTable {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        SeriesTable { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// Builds a table from a shared grid and equally long columns.
    pub fn from_columns(name: impl Into<String>, grid: &[f64], named: &[(&str, &[f64])]) -> Self {
        let mut columns = vec!["t".to_string()];
        columns.extend(named.iter().map(|(n, _)| n.to_string()));
        let rows = grid
            .iter()
            .enumerate()
            .map(|(i, t)| std::iter::once(*t).chain(named.iter().map(|(_, c)| c[i])).collect())
            .collect();
        SeriesTable { name: name.into(), columns, rows }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub tables: Vec<SeriesTable>,
}

impl ExperimentOutput {
    pub(crate) fn new(provenance: Provenance, summary: Summary, tables: Vec<SeriesTable>) -> Self {
        let series = tables.iter().map(SeriesTable::file_name).collect();
        ExperimentOutput { report: ExperimentReport { provenance, summary, series }, tables }
    }
}
