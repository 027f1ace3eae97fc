//! Training orchestration and accuracy sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DetectorChoice, ExperimentConfig};
use super::dataset::{label_trials, mix, simulate_trials, to_training_set, Phase, Trial, TrialStream};
use crate::classical::{evaluate, Criterion, EigenSpectrum};
use crate::detectors::{build_detector, make_feature_cov, normalize_in_place, make_feature_eigen, make_feature_fbss, Detector, DetectorSpec, NetKind};
use crate::error::{Error, Result};
use crate::neural::{evaluate_loss, train, TrainConfig};
use crate::rng::{self, Domain};

const TAG_SNAPSHOTS: u64 = 1;
const TAG_SNR: u64 = 2;
const TAG_EVAL: u64 = 3;

/// A trained network and how it got there.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedDetector {
    pub detector: Detector,
    pub train_config: TrainConfig,
    /// Loss of the initialized network over the full training set.
    pub initial_loss: f64,
    pub loss_history: Vec<f64>,
}

impl TrainedDetector {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(self.initial_loss)
    }
}

fn kind_tag(kind: NetKind) -> u64 {
    match kind {
        NetKind::ErNet => 1,
        NetKind::EcNet => 2,
        NetKind::CovNet => 3,
    }
}

/// Stream that training trials for `(num_snapshots, coherent)` come from.
pub fn train_stream(config: &ExperimentConfig, num_snapshots: usize, coherent: bool) -> TrialStream {
    TrialStream {
        master: config.seed,
        domain: Domain::TrainData,
        key: mix(&[num_snapshots as u64, u64::from(coherent)]),
    }
}

/// Builds and trains `spec` on already simulated training trials.
pub fn train_on_trials(config: &ExperimentConfig, spec: &DetectorSpec, trials: &[Trial]) -> Result<TrainedDetector> {
    let n = trials.first().map(|t| t.scenario.num_snapshots).unwrap_or(0) as u64;
    let key = mix(&[kind_tag(spec.kind), n, u64::from(spec.fbss.is_some())]);
    let data = to_training_set(&label_trials(trials, spec)?, spec)?;
    let net = build_detector(spec, &mut rng::stream(config.seed, Domain::Init, key))?;
    let train_config = config.train_config(mix(&[config.seed, key]), spec.loss());
    let initial_loss = evaluate_loss(&net, &data, train_config.loss)?;
    let outcome = train(net, &data, &train_config)?;
    Ok(TrainedDetector {
        detector: Detector::new(spec.clone(), outcome.network)?,
        train_config,
        initial_loss,
        loss_history: outcome.loss_history,
    })
}

/// Simulates the configured training set and trains one network on it.
pub fn train_detector(config: &ExperimentConfig, kind: NetKind) -> Result<TrainedDetector> {
    config.validate()?;
    let trials = simulate_trials(
        config,
        config.num_snapshots,
        config.coherent,
        Phase::Train,
        config.num_train,
        train_stream(config, config.num_snapshots, config.coherent),
    )?;
    train_on_trials(config, &config.detector_spec(kind, config.coherent), &trials)
}

/// Something that turns a trial into a count estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Network(Detector),
    Criterion {
        criterion: Criterion,
        /// Sub-array size when the criterion runs on the FBSS spectrum.
        fbss: Option<usize>,
    },
}

impl Estimator {
    pub fn name(&self) -> String {
        match self {
            Estimator::Network(d) => d.spec.label(),
            Estimator::Criterion { criterion, fbss } => {
                let base = match criterion {
                    Criterion::Aic => "aic",
                    Criterion::Mdl => "mdl",
                };
                match fbss {
                    Some(_) => format!("fbss-{base}"),
                    None => base.to_string(),
                }
            }
        }
    }
}

/// Spectra shared by all estimators of one trial, computed on demand.
struct TrialFeatures<'a> {
    trial: &'a Trial,
    eigen: Option<Vec<f64>>,
    fbss: Option<(usize, Vec<f64>)>,
}

impl<'a> TrialFeatures<'a> {
    fn eigen(&mut self) -> Result<&[f64]> {
        if self.eigen.is_none() {
            self.eigen = Some(make_feature_eigen(&self.trial.covariance)?);
        }
        Ok(self.eigen.as_deref().expect("filled above"))
    }

    fn fbss(&mut self, m0: usize) -> Result<&[f64]> {
        if self.fbss.as_ref().map(|(m, _)| *m) != Some(m0) {
            self.fbss = Some((m0, make_feature_fbss(&self.trial.covariance, m0)?));
        }
        Ok(&self.fbss.as_ref().expect("filled above").1)
    }
}

/// Estimates of every estimator for one trial.
pub fn estimate_all(estimators: &[Estimator], trial: &Trial) -> Result<Vec<usize>> {
    let mut f = TrialFeatures {
        trial,
        eigen: None,
        fbss: None,
    };
    let n = trial.scenario.num_snapshots;
    estimators
        .iter()
        .map(|e| match e {
            Estimator::Network(d) => {
                let mut features = match (d.spec.kind, d.spec.fbss) {
                    (NetKind::CovNet, _) => make_feature_cov(&trial.covariance)?,
                    (_, Some(m0)) => f.fbss(m0)?.to_vec(),
                    (_, None) => f.eigen()?.to_vec(),
                };
                if d.spec.normalize {
                    normalize_in_place(&mut features);
                }
                d.decide(&features)
            }
            Estimator::Criterion { criterion, fbss } => {
                let values = match fbss {
                    Some(m0) => f.fbss(*m0)?.to_vec(),
                    None => f.eigen()?.to_vec(),
                };
                Ok(evaluate(&EigenSpectrum::new(values, n)?, *criterion)?.estimate)
            }
        })
        .collect()
}

/// Number of correct estimates per estimator over `trials`.
pub fn count_correct(estimators: &[Estimator], trials: &[Trial]) -> Result<Vec<usize>> {
    trials
        .par_iter()
        .map(|t| {
            let est = estimate_all(estimators, t)?;
            Ok(est.iter().map(|&k| usize::from(k == t.true_k())).collect::<Vec<_>>())
        })
        .try_reduce(
            || vec![0; estimators.len()],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
        )
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub axis: f64,
    pub detector: String,
    pub accuracy: f64,
    pub n_trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn accuracy(&self, axis: f64, detector: &str) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.axis == axis && r.detector == detector)
            .map(|r| r.accuracy)
    }

    pub fn detectors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.detector) {
                out.push(r.detector.clone());
            }
        }
        out
    }

    pub fn axis_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.axis) {
                out.push(r.axis);
            }
        }
        out
    }
}

/// Sweep result plus the networks trained along the way, keyed by the axis
/// value they were trained for (`None` when shared across the axis).
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub result: SweepResult,
    pub trained: Vec<(Option<f64>, TrainedDetector)>,
}

fn build_estimators(
    config: &ExperimentConfig,
    num_snapshots: usize,
    coherent: bool,
    trained: &mut Vec<TrainedDetector>,
) -> Result<Vec<Estimator>> {
    let needs_training = config.detectors.iter().any(|d| d.net_kind().is_some());
    let train_trials = if needs_training {
        simulate_trials(
            config,
            num_snapshots,
            coherent,
            Phase::Train,
            config.num_train,
            train_stream(config, num_snapshots, coherent),
        )?
    } else {
        Vec::new()
    };
    let fbss = coherent.then_some(config.subarray_size);
    let mut out = Vec::with_capacity(config.detectors.len());
    for choice in &config.detectors {
        let est = match choice {
            DetectorChoice::Aic => Estimator::Criterion {
                criterion: Criterion::Aic,
                fbss,
            },
            DetectorChoice::Mdl => Estimator::Criterion {
                criterion: Criterion::Mdl,
                fbss,
            },
            net => {
                let kind = net.net_kind().expect("non-criterion choices are networks");
                let t = train_on_trials(config, &config.detector_spec(kind, coherent), &train_trials)?;
                let det = t.detector.clone();
                trained.push(t);
                Estimator::Network(det)
            }
        };
        out.push(est);
    }
    Ok(out)
}

fn evaluate_point(
    config: &ExperimentConfig,
    estimators: &[Estimator],
    num_snapshots: usize,
    snr_db: f64,
    coherent: bool,
    tag: u64,
    axis: f64,
) -> Result<Vec<SweepRecord>> {
    let stream = TrialStream {
        master: config.seed,
        domain: Domain::TestData,
        key: mix(&[tag, num_snapshots as u64, snr_db.to_bits(), u64::from(coherent)]),
    };
    let trials = simulate_trials(
        config,
        num_snapshots,
        coherent,
        Phase::Test(snr_db),
        config.num_test_per_point,
        stream,
    )?;
    let correct = count_correct(estimators, &trials)?;
    Ok(estimators
        .iter()
        .zip(correct)
        .map(|(e, c)| SweepRecord {
            axis,
            detector: e.name(),
            accuracy: if trials.is_empty() { 0.0 } else { c as f64 / trials.len() as f64 },
            n_trials: trials.len(),
            seed: config.seed,
        })
        .collect())
}

/// Accuracy against snapshot count at `config.test_snr_db`, non-coherent
/// sources. Networks are retrained for every snapshot count.
pub fn sweep_snapshots(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let mut result = SweepResult::default();
    let mut trained_all = Vec::new();
    for &n in &config.snapshot_axis {
        let mut trained = Vec::new();
        let estimators = build_estimators(config, n, false, &mut trained)?;
        result.records.extend(evaluate_point(
            config,
            &estimators,
            n,
            config.test_snr_db,
            false,
            TAG_SNAPSHOTS,
            n as f64,
        )?);
        trained_all.extend(trained.into_iter().map(|t| (Some(n as f64), t)));
    }
    Ok(SweepOutput {
        result,
        trained: trained_all,
    })
}

fn sweep_snr(config: &ExperimentConfig, coherent: bool) -> Result<SweepOutput> {
    config.validate()?;
    let mut trained = Vec::new();
    let estimators = build_estimators(config, config.num_snapshots, coherent, &mut trained)?;
    let mut result = SweepResult::default();
    for &snr in &config.snr_axis_db {
        if snr.is_nan() {
            return Err(Error::Config("NaN on the SNR axis".into()));
        }
        result.records.extend(evaluate_point(
            config,
            &estimators,
            config.num_snapshots,
            snr,
            coherent,
            TAG_SNR,
            snr,
        )?);
    }
    Ok(SweepOutput {
        result,
        trained: trained.into_iter().map(|t| (None, t)).collect(),
    })
}

/// Accuracy against test SNR for non-coherent sources; networks are
/// trained once on mixed-SNR data.
pub fn sweep_snr_noncoherent(config: &ExperimentConfig) -> Result<SweepOutput> {
    sweep_snr(config, false)
}

/// Accuracy against test SNR for coherent sources using FBSS spectra.
pub fn sweep_snr_coherent(config: &ExperimentConfig) -> Result<SweepOutput> {
    sweep_snr(config, true)
}

/// Accuracy of `estimator` at the configured snapshot count, coherence mode
/// and `snr_db`.
pub fn evaluate_estimator(config: &ExperimentConfig, estimator: &Estimator, snr_db: f64) -> Result<SweepRecord> {
    config.validate()?;
    let mut rec = evaluate_point(
        config,
        std::slice::from_ref(estimator),
        config.num_snapshots,
        snr_db,
        config.coherent,
        TAG_EVAL,
        snr_db,
    )?;
    Ok(rec.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            num_train: 200,
            num_test_per_point: 100,
            epochs: 3,
            seed: 5,
            snapshot_axis: vec![10, 20],
            snr_axis_db: vec![0.0, 20.0],
            ..Default::default()
        }
    }

    #[test]
    fn snapshot_sweep_shape() {
        let out = sweep_snapshots(&tiny()).unwrap();
        assert_eq!(out.result.records.len(), 2 * 5);
        assert_eq!(out.trained.len(), 2 * 3);
        assert_eq!(out.result.detectors(), vec!["ernet", "ecnet", "aic", "mdl", "covnet"]);
        assert!(out
            .result
            .records
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.accuracy) && r.n_trials == 100));
    }

    #[test]
    fn coherent_sweep_uses_fbss() {
        let cfg = ExperimentConfig {
            detectors: vec![DetectorChoice::Ecnet, DetectorChoice::Aic, DetectorChoice::Mdl],
            ..tiny()
        };
        let out = sweep_snr_coherent(&cfg).unwrap();
        assert_eq!(out.result.detectors(), vec!["fbss-ecnet", "fbss-aic", "fbss-mdl"]);
        assert_eq!(out.trained[0].1.detector.spec.input_dim(), 5);
    }

    #[test]
    fn sweeps_are_reproducible() {
        let cfg = ExperimentConfig {
            detectors: vec![DetectorChoice::Ernet, DetectorChoice::Mdl],
            ..tiny()
        };
        let a = sweep_snr_noncoherent(&cfg).unwrap();
        let b = sweep_snr_noncoherent(&cfg).unwrap();
        assert_eq!(a.result, b.result);
        assert_eq!(a.trained[0].1, b.trained[0].1);
    }

    #[test]
    fn classical_only_sweep_skips_training() {
        let cfg = ExperimentConfig {
            detectors: vec![DetectorChoice::Aic],
            ..tiny()
        };
        let out = sweep_snr_noncoherent(&cfg).unwrap();
        assert!(out.trained.is_empty());
        assert_eq!(out.result.records.len(), 2);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let cfg = ExperimentConfig {
            epochs: 0,
            ..tiny()
        };
        let t = train_detector(&cfg, NetKind::ErNet).unwrap();
        let spec = cfg.detector_spec(NetKind::ErNet, false);
        let key = mix(&[kind_tag(NetKind::ErNet), cfg.num_snapshots as u64, 0]);
        let init = build_detector(&spec, &mut rng::stream(cfg.seed, Domain::Init, key)).unwrap();
        assert_eq!(t.detector.network, init);
        assert!(t.loss_history.is_empty());
        assert_eq!(t.final_loss(), t.initial_loss);
    }
}
