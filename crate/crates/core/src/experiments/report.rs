//! Sweep CSV files and run manifests.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sweep::{SweepRecord, SweepResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["axis", "detector", "accuracy", "n_trials", "seed"];

/// Writes `axis,detector,accuracy,n_trials,seed` rows with LF line endings.
/// An empty result produces the header alone.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &result.records {
        w.write_record([
            r.axis.to_string(),
            r.detector.clone(),
            r.accuracy.to_string(),
            r.n_trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    write_csv(result, fs::File::create(path)?)
}

pub fn parse_csv<R: Read>(input: R) -> Result<SweepResult> {
    let mut rdr = csv::Reader::from_reader(input);
    if rdr.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected CSV header {:?}", rdr.headers()?)));
    }
    let records = rdr
        .deserialize::<SweepRecord>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(SweepResult { records })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<SweepResult> {
    parse_csv(fs::File::open(path)?)
}

/// What was run, with enough detail to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub axis: String,
    pub axis_values: Vec<f64>,
    pub detectors: Vec<String>,
    pub num_train: usize,
    pub num_test_per_point: usize,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(command: &str, axis: &str, config: &ExperimentConfig, result: &SweepResult) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash()?,
            seed: config.seed,
            axis: axis.to_string(),
            axis_values: result.axis_values(),
            detectors: result.detectors(),
            num_train: config.num_train,
            num_test_per_point: config.num_test_per_point,
            config: config.clone(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
