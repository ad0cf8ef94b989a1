//! JSONL metrics stream and the summary CSV.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knn_acc: Option<f64>,
    /// Fraction of curated steps that ended satisfied, when curation ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curation_satisfied: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curation_resampled: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationStepRecord {
    pub epoch: usize,
    pub step: usize,
    pub rounds_used: usize,
    pub resampled: usize,
    pub satisfied: bool,
    pub margin: f64,
}

/// One line of the metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetricRecord {
    Epoch(EpochRecord),
    Curation(CurationStepRecord),
}

pub struct MetricsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl MetricsWriter {
    /// Creates (truncating) a JSONL file.
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, record: &MetricRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n").map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub const SUMMARY_HEADER: &str = "model_id,regime,curated,knn_acc,linear_acc,mean_area_fraction";

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model_id: String,
    pub regime: String,
    pub curated: bool,
    pub knn_acc: Option<f64>,
    pub linear_acc: Option<f64>,
    pub mean_area_fraction: Option<f64>,
}

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.model_id.replace(',', "_"),
            self.regime,
            self.curated,
            opt(self.knn_acc),
            opt(self.linear_acc),
            opt(self.mean_area_fraction)
        )
    }
}

/// Appends a row, writing the header first if the file is new or empty.
pub fn append_summary_row(path: &Path, row: &SummaryRow) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(SUMMARY_HEADER);
        text.push('\n');
    }
    text.push_str(&row.to_csv());
    text.push('\n');
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
