use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainError;

pub const CSV_HEADER: &str = "step,tokens_seen,train_loss,val_loss,val_ppl,lr,grad_norm,wall_ms";

/// One row of a training log. `train_loss` is the mean over the steps since
/// the previous record, absent for the initial step-0 evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: usize,
    pub tokens_seen: u64,
    pub train_loss: Option<f64>,
    pub val_loss: f64,
    pub val_ppl: f64,
    pub lr: f64,
    pub grad_norm: Option<f64>,
    pub wall_ms: u64,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step,
            self.tokens_seen,
            opt(self.train_loss),
            self.val_loss,
            self.val_ppl,
            self.lr,
            opt(self.grad_norm),
            self.wall_ms
        )
    }

    /// Same record without the timing column, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_ms: 0,
            ..self.clone()
        }
    }
}

/// Appends every record to a JSONL file and a CSV file.
pub struct MetricsWriter {
    jsonl: BufWriter<File>,
    csv: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(jsonl_path: &Path, csv_path: &Path) -> Result<Self, TrainError> {
        let jsonl = BufWriter::new(File::create(jsonl_path)?);
        let mut csv = BufWriter::new(File::create(csv_path)?);
        writeln!(csv, "{CSV_HEADER}")?;
        Ok(Self { jsonl, csv })
    }

    pub fn write(&mut self, rec: &MetricsRecord) -> Result<(), TrainError> {
        writeln!(self.jsonl, "{}", serde_json::to_string(rec)?)?;
        writeln!(self.csv, "{}", rec.csv_row())?;
        self.jsonl.flush()?;
        self.csv.flush()?;
        Ok(())
    }
}

pub fn read_metrics_jsonl(path: &Path) -> Result<Vec<MetricsRecord>, TrainError> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
