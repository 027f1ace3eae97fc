//! Monte-Carlo trial generation and the dataset text format.
//!
//! A dataset file has one header line of `key=value` pairs
//! (`M`, `N`, `feature_dim`, `coherence`, `seed`) followed by one line per
//! sample: the comma-separated features and then the integer label.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::detectors::DetectorSpec;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::neural::Dataset;
use crate::rng::{self, Domain};
use crate::signal::{draw_distinct_doas, generate_snapshots, sample_covariance, Coherence, Scenario};

/// Hash of several integers into one stream index.
pub fn mix(parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phase {
    /// SNR drawn uniformly over the configured training range.
    Train,
    /// Fixed SNR.
    Test(f64),
}

/// One simulated draw reduced to its sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub scenario: Scenario,
    pub covariance: ComplexMatrix,
}

impl Trial {
    pub fn true_k(&self) -> usize {
        self.scenario.num_sources()
    }
}

/// Feature vector with its true count.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub true_k: usize,
    pub meta: Option<Scenario>,
}

/// Draw one scenario: `K` uniform over `0..=max_sources`, distinct DOAs
/// uniform over `[0, 2π)`, SNR per `phase`. In coherent mode the number of
/// coherent sources is uniform over `0..K`; each coherent source copies an
/// independent source chosen uniformly.
pub fn draw_scenario(
    config: &ExperimentConfig,
    num_snapshots: usize,
    coherent: bool,
    phase: Phase,
    rng: &mut impl Rng,
) -> Result<Scenario> {
    let k = rng.random_range(0..=config.max_sources);
    let doas = draw_distinct_doas(k, rng)?;
    let snr_db = match phase {
        Phase::Train if config.train_snr_low_db < config.train_snr_high_db => {
            rng.random_range(config.train_snr_low_db..=config.train_snr_high_db)
        }
        Phase::Train => config.train_snr_low_db,
        Phase::Test(snr) => snr,
    };
    let coherence = if coherent {
        let num_coherent = if k == 0 { 0 } else { rng.random_range(0..k) };
        let independent = k - num_coherent;
        let copy_map = (independent..k)
            .map(|c| (c, rng.random_range(0..independent)))
            .collect();
        Coherence::Coherent { copy_map }
    } else {
        Coherence::NonCoherent
    };
    Ok(Scenario {
        num_antennas: config.num_antennas,
        num_snapshots,
        doas,
        snr_db,
        coherence,
        seed: rng.random(),
    })
}

/// Where a batch of trials draws its randomness from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStream {
    pub master: u64,
    pub domain: Domain,
    /// Distinguishes batches within one domain.
    pub key: u64,
}

impl TrialStream {
    fn rng(&self, index: usize) -> rng::Rng {
        rng::stream(self.master, self.domain, mix(&[self.key, index as u64]))
    }
}

/// `count` independent trials, generated in parallel. Trial `i` depends
/// only on `(stream, i)`.
pub fn simulate_trials(
    config: &ExperimentConfig,
    num_snapshots: usize,
    coherent: bool,
    phase: Phase,
    count: usize,
    stream: TrialStream,
) -> Result<Vec<Trial>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut r = stream.rng(i);
            let scenario = draw_scenario(config, num_snapshots, coherent, phase, &mut r)?;
            let batch = generate_snapshots(&scenario, &mut r)?;
            let covariance = sample_covariance(&batch)?;
            Ok(Trial { scenario, covariance })
        })
        .collect()
}

pub fn label_trials(trials: &[Trial], spec: &DetectorSpec) -> Result<Vec<LabeledSample>> {
    trials
        .par_iter()
        .map(|t| {
            Ok(LabeledSample {
                features: spec.features(&t.covariance)?,
                true_k: t.true_k(),
                meta: Some(t.scenario.clone()),
            })
        })
        .collect()
}

/// Training or test samples for `spec` following `config`. Training data
/// and test data come from disjoint seed domains.
pub fn generate_dataset(config: &ExperimentConfig, spec: &DetectorSpec, phase: Phase, count: usize) -> Result<Vec<LabeledSample>> {
    config.validate()?;
    let coherent = config.coherent;
    let domain = match phase {
        Phase::Train => Domain::TrainData,
        Phase::Test(_) => Domain::TestData,
    };
    let stream = TrialStream {
        master: config.seed,
        domain,
        key: mix(&[config.num_snapshots as u64, u64::from(coherent)]),
    };
    let trials = simulate_trials(config, config.num_snapshots, coherent, phase, count, stream)?;
    label_trials(&trials, spec)
}

/// Inputs and targets for training `spec`.
pub fn to_training_set(samples: &[LabeledSample], spec: &DetectorSpec) -> Result<Dataset> {
    let mut inputs = Vec::with_capacity(samples.len());
    let mut targets = Vec::with_capacity(samples.len());
    for s in samples {
        if s.features.len() != spec.input_dim() {
            return Err(Error::Dimension(format!(
                "sample has {} features, detector expects {}",
                s.features.len(),
                spec.input_dim()
            )));
        }
        inputs.push(s.features.clone());
        targets.push(spec.target(s.true_k)?);
    }
    Dataset::new(inputs, targets)
}

/// Header of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub num_antennas: usize,
    pub num_snapshots: usize,
    pub feature_dim: usize,
    pub coherence: String,
    pub seed: u64,
}

impl DatasetHeader {
    fn render(&self) -> String {
        format!(
            "M={},N={},feature_dim={},coherence={},seed={}",
            self.num_antennas, self.num_snapshots, self.feature_dim, self.coherence, self.seed
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for part in line.trim().split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field {part:?}")))?;
            fields.insert(k.trim(), v.trim());
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Parse(format!("header lacks {k}")));
        let num = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|e| Error::Parse(format!("{k}: {e}"))) };
        Ok(Self {
            num_antennas: num("M")? as usize,
            num_snapshots: num("N")? as usize,
            feature_dim: num("feature_dim")? as usize,
            coherence: get("coherence")?.to_string(),
            seed: num("seed")?,
        })
    }
}

pub fn write_dataset(path: impl AsRef<Path>, header: &DatasetHeader, samples: &[LabeledSample]) -> Result<()> {
    let mut out = header.render();
    out.push('\n');
    for s in samples {
        if s.features.len() != header.feature_dim {
            return Err(Error::Dimension(format!(
                "sample has {} features, header says {}",
                s.features.len(),
                header.feature_dim
            )));
        }
        for f in &s.features {
            write!(out, "{f},").expect("writing to a String");
        }
        writeln!(out, "{}", s.true_k).expect("writing to a String");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<(DatasetHeader, Vec<LabeledSample>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = DatasetHeader::parse(lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))?)?;
    let mut samples = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.feature_dim + 1 {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, found {}",
                no + 2,
                header.feature_dim + 1,
                fields.len()
            )));
        }
        let features = fields[..header.feature_dim]
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", no + 2))))
            .collect::<Result<Vec<_>>>()?;
        let true_k = fields[header.feature_dim]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", no + 2)))?;
        samples.push(LabeledSample {
            features,
            true_k,
            meta: None,
        });
    }
    Ok((header, samples))
}
