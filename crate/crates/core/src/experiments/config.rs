use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detectors::{DetectorSpec, NetKind};
use crate::error::{Error, Result};
use crate::neural::TrainConfig;

/// Anything that can produce a source-count estimate in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorChoice {
    Ernet,
    Ecnet,
    Aic,
    Mdl,
    Covnet,
}

impl DetectorChoice {
    pub const ALL: [DetectorChoice; 5] = [
        DetectorChoice::Ernet,
        DetectorChoice::Ecnet,
        DetectorChoice::Aic,
        DetectorChoice::Mdl,
        DetectorChoice::Covnet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorChoice::Ernet => "ernet",
            DetectorChoice::Ecnet => "ecnet",
            DetectorChoice::Aic => "aic",
            DetectorChoice::Mdl => "mdl",
            DetectorChoice::Covnet => "covnet",
        }
    }

    pub fn net_kind(self) -> Option<NetKind> {
        match self {
            DetectorChoice::Ernet => Some(NetKind::ErNet),
            DetectorChoice::Ecnet => Some(NetKind::EcNet),
            DetectorChoice::Covnet => Some(NetKind::CovNet),
            DetectorChoice::Aic | DetectorChoice::Mdl => None,
        }
    }
}

impl fmt::Display for DetectorChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorChoice::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown detector {s:?}")))
    }
}

/// Simulation, training and sweep settings. Defaults follow the reference
/// setup: a 10-element ULA, 20 snapshots, up to 5 sources, 8000 training
/// samples drawn at SNRs uniform over [0, 40] dB, 400 epochs of ADAM at
/// learning rate 0.001 with batch size 128, (8, 8) hidden units, and 5-element
/// sub-arrays for smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_antennas: usize,
    pub num_snapshots: usize,
    pub max_sources: usize,
    pub train_snr_low_db: f64,
    pub train_snr_high_db: f64,
    pub num_train: usize,
    pub num_test_per_point: usize,
    pub detectors: Vec<DetectorChoice>,
    pub coherent: bool,
    pub subarray_size: usize,
    pub seed: u64,
    /// Test SNR of the snapshot sweep and of `eval`.
    pub test_snr_db: f64,
    pub snapshot_axis: Vec<usize>,
    pub snr_axis_db: Vec<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden1: usize,
    pub hidden2: usize,
    pub normalize_features: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            num_antennas: 10,
            num_snapshots: 20,
            max_sources: 5,
            train_snr_low_db: 0.0,
            train_snr_high_db: 40.0,
            num_train: 8000,
            num_test_per_point: 2000,
            detectors: DetectorChoice::ALL.to_vec(),
            coherent: false,
            subarray_size: 5,
            seed: 0,
            test_snr_db: 5.0,
            snapshot_axis: vec![5, 10, 20, 50, 100, 200],
            snr_axis_db: (0..=8).map(|i| 5.0 * i as f64).collect(),
            epochs: 400,
            batch_size: 128,
            learning_rate: 1e-3,
            hidden1: 8,
            hidden2: 8,
            normalize_features: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_antennas < 2 {
            return fail("num_antennas must be at least 2".into());
        }
        if self.max_sources >= self.num_antennas {
            return fail(format!(
                "max_sources {} must be below num_antennas {}",
                self.max_sources, self.num_antennas
            ));
        }
        if self.num_train == 0 {
            return fail("num_train must be at least 1".into());
        }
        if self.num_snapshots == 0 || self.snapshot_axis.contains(&0) {
            return fail("snapshot counts must be positive".into());
        }
        if self.train_snr_low_db.is_nan() || self.train_snr_high_db.is_nan() || self.train_snr_low_db > self.train_snr_high_db {
            return fail("train SNR range is empty".into());
        }
        if self.subarray_size == 0 || self.subarray_size > self.num_antennas {
            return fail(format!("subarray_size {} outside 1..={}", self.subarray_size, self.num_antennas));
        }
        if self.coherent && self.subarray_size < 2 {
            return fail("FBSS spectra need sub-arrays of at least 2 elements".into());
        }
        if self.hidden1 == 0 || self.hidden2 == 0 {
            return fail("hidden layer sizes must be positive".into());
        }
        self.train_config(0, crate::neural::Loss::L2).validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = toml::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Network spec for `kind`, using FBSS features in coherent mode.
    pub fn detector_spec(&self, kind: NetKind, coherent: bool) -> DetectorSpec {
        let mut spec = DetectorSpec::new(kind, self.num_antennas);
        spec.hidden = (self.hidden1, self.hidden2);
        spec.normalize = self.normalize_features;
        if coherent && kind != NetKind::CovNet {
            spec.fbss = Some(self.subarray_size);
        }
        spec
    }

    pub fn train_config(&self, seed: u64, loss: crate::neural::Loss) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            loss,
            ..TrainConfig::default()
        }
    }
}
