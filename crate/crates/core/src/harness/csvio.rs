//! CSV output for sweep results.
//!
//! The main file has one row per (scheme, grid point). The companion
//! `<stem>_txprob.csv` lists, for every row, the transmission probability of
//! each dimension in descending order of gain.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::sweep::{SweepResult, SweepRow};

pub const COLUMNS: [&str; 12] = [
    "scheme",
    "c0",
    "H0",
    "H_tgt",
    "trials",
    "latency_mean",
    "latency_stderr",
    "accuracy",
    "entropy_mean",
    "outage_rate",
    "seed",
    "config_hash",
];

pub const TXPROB_COLUMNS: [&str; 8] = ["row", "scheme", "c0", "H0", "rank", "dim", "gain", "tx_prob"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxProbRow {
    pub row: usize,
    pub scheme: String,
    pub c0: Option<f64>,
    #[serde(rename = "H0")]
    pub h0: Option<f64>,
    pub rank: usize,
    pub dim: usize,
    pub gain: f64,
    pub tx_prob: f64,
}

/// `dir/stem.csv` -> `dir/stem_txprob.csv`.
pub fn companion_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}_txprob.csv"))
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    Ok(w)
}

pub fn write_rows(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = writer(path, &COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn tx_prob_rows(result: &SweepResult) -> Vec<TxProbRow> {
    let mut order: Vec<usize> = (0..result.gains.len()).collect();
    order.sort_by(|&a, &b| result.gains[b].total_cmp(&result.gains[a]).then(a.cmp(&b)));
    let mut out = Vec::new();
    for (i, (row, probs)) in result.rows.iter().zip(&result.tx_prob).enumerate() {
        for (rank, &dim) in order.iter().enumerate() {
            out.push(TxProbRow {
                row: i,
                scheme: row.scheme.clone(),
                c0: row.c0,
                h0: row.h0,
                rank,
                dim,
                gain: result.gains[dim],
                tx_prob: probs[dim],
            });
        }
    }
    out
}

/// Writes `path` and its companion transmission-probability file.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_rows(&result.rows, path)?;
    let companion = companion_path(path);
    let mut w = writer(&companion, &TXPROB_COLUMNS)?;
    for r in tx_prob_rows(result) {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&companion, e))
}

fn read_all<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    read_all(path)
}

pub fn read_tx_prob(path: &Path) -> Result<Vec<TxProbRow>> {
    read_all(path)
}
