//! Result files: one CSV row per sweep cell, or the full table as JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sweep::SweepTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    /// Pretty JSON with per-trial records.
    Structured,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "structured" | "json" => Ok(OutputFormat::Structured),
            other => Err(Error::Config(format!("unknown output format {other:?} (expected csv or structured)"))),
        }
    }
}

/// One CSV row. Floats are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub sweep_var: String,
    pub value: String,
    pub sea_state: String,
    pub mean_rate_ris: f64,
    pub std_rate_ris: f64,
    pub mean_rate_noris: f64,
    pub std_rate_noris: f64,
    pub mean_los_prob: f64,
    pub mean_tx_power_w: f64,
    pub trials: usize,
    pub seed: u64,
}

impl SweepTable {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.cells
            .iter()
            .map(|c| CsvRow {
                sweep_var: c.sweep_var.to_string(),
                value: c.value.to_string(),
                sea_state: c.sea_state.to_string(),
                mean_rate_ris: c.mean_rate_ris,
                std_rate_ris: c.std_rate_ris,
                mean_rate_noris: c.mean_rate_noris,
                std_rate_noris: c.std_rate_noris,
                mean_los_prob: c.mean_los_prob,
                mean_tx_power_w: c.mean_tx_power_w,
                trials: c.trials,
                seed: c.seed,
            })
            .collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format { path: path.to_path_buf(), message: e.to_string() }
}

pub const CSV_COLUMNS: [&str; 11] = [
    "sweep_var",
    "value",
    "sea_state",
    "mean_rate_ris",
    "std_rate_ris",
    "mean_rate_noris",
    "std_rate_noris",
    "mean_los_prob",
    "mean_tx_power_w",
    "trials",
    "seed",
];

pub fn write_csv<W: Write>(table: &SweepTable, out: W) -> std::result::Result<(), csv::Error> {
    // header written up front so an empty table still has one
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in table.csv_rows() {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `table` to `path`. Cells that failed are still written with the
/// trials that completed.
pub fn emit_results(table: &SweepTable, path: &Path, format: OutputFormat) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(table, &mut out).map_err(|e| format_err(path, e))?,
        OutputFormat::Structured => {
            serde_json::to_writer_pretty(&mut out, table).map_err(|e| format_err(path, e))?;
            out.write_all(b"\n").map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    r.deserialize().collect::<std::result::Result<Vec<CsvRow>, _>>().map_err(|e| format_err(path, e))
}

pub fn read_structured(path: &Path) -> Result<SweepTable> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}
