//! Output files: the records table, the run manifest and SVG charts.

mod svg;

pub use svg::{render_line_svg, render_panel_svg, Marker, PlotOptions, Series, SeriesStyle};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::experiments::{CellFailure, SweepRecord};
use crate::numfmt::sig12;

pub const RECORDS_HEADER: [&str; 11] = [
    "n_train",
    "d",
    "seed",
    "ablation",
    "estimator",
    "train_mse",
    "test_mse",
    "smallest_nonzero_sv",
    "bias_term_mean",
    "variance_term_mean",
    "regime",
];

/// The records table as CSV text, rows in the given order. An absent
/// singular value is an empty field.
pub fn records_to_csv(records: &[SweepRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORDS_HEADER)?;
    for r in records {
        w.write_record([
            r.n_train.to_string(),
            r.d.to_string(),
            r.seed.to_string(),
            r.ablation.to_string(),
            r.estimator.to_string(),
            sig12(r.train_mse),
            sig12(r.test_mse),
            r.smallest_nonzero_sv.map(sig12).unwrap_or_default(),
            sig12(r.bias_term_mean),
            sig12(r.variance_term_mean),
            r.regime.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV writer emits UTF-8 for UTF-8 input"))
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &[SweepRecord]) -> Result<()> {
    fs::write(path, records_to_csv(records)?)?;
    Ok(())
}

/// SHA-256 (hex) of the canonical JSON form of `config`: object keys sorted,
/// no whitespace.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    // serde_json::Value keeps object keys in sorted order
    let canonical = serde_json::to_string(&serde_json::to_value(config)?)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub config: serde_json::Value,
    pub output_paths: Vec<PathBuf>,
    pub cells_total: usize,
    pub cells_failed: usize,
    pub failures: Vec<CellFailure>,
}

impl RunManifest {
    pub fn new<T: Serialize>(command: &str, config: &T) -> Result<Self> {
        Ok(Self {
            command: command.to_owned(),
            config_hash: config_hash(config)?,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config: serde_json::to_value(config)?,
            output_paths: Vec::new(),
            cells_total: 0,
            cells_failed: 0,
            failures: Vec::new(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
