use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use srcnum::classical::Criterion;
use srcnum::detectors::Detector;
use srcnum::experiments::{
    bench_complexity, emit_csv, evaluate_estimator, generate_dataset, sweep_snapshots, sweep_snr_coherent,
    sweep_snr_noncoherent, train_detector, write_dataset, DatasetHeader, DetectorChoice, Estimator, ExperimentConfig,
    Phase, RunManifest, SweepOutput, SweepResult, TrainedDetector,
};
use srcnum::neural::{read_model, write_model};

#[derive(Parser)]
#[command(name = "srcnum", version, about = "Source-number detection with eigenvalue-fed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Coherent sources with FBSS features on sub-arrays of this size.
    #[arg(long, value_name = "M0")]
    fbss: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m0) = self.fbss {
            cfg.coherent = true;
            cfg.subarray_size = m0;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a labeled dataset file for one detector's features.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ernet")]
        detector: DetectorChoice,
        /// Fixed test SNR in dB; training-range SNRs when omitted.
        #[arg(long)]
        snr: Option<f64>,
        /// Number of samples; the configured training size when omitted.
        #[arg(long)]
        count: Option<usize>,
        /// Output directory for the dataset file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one network and write it as a model file.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "ernet")]
        detector: DetectorChoice,
        /// Output directory for the model file and its loss curve.
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy of a model file or a classical criterion at one SNR.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Model file written by `train`.
        #[arg(long, conflicts_with = "detector")]
        model: Option<PathBuf>,
        /// `aic` or `mdl`.
        #[arg(long)]
        detector: Option<DetectorChoice>,
        /// Test SNR in dB; the configured test SNR when omitted.
        #[arg(long)]
        snr: Option<f64>,
        /// Optional directory for results.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy against snapshot count, retraining per count.
    SweepSnapshots(SweepArgs),
    /// Accuracy against SNR for non-coherent sources.
    SweepSnr(SweepArgs),
    /// Accuracy against SNR for coherent sources with FBSS.
    SweepSnrCoherent(SweepArgs),
    /// Operation counts and per-decision timings.
    BenchComplexity {
        #[arg(long, default_value_t = 10)]
        antennas: usize,
        #[arg(long, default_value_t = 20)]
        snapshots: usize,
        #[arg(long, default_value_t = 8)]
        hidden1: usize,
        #[arg(long, default_value_t = 8)]
        hidden2: usize,
        #[arg(long, default_value_t = 200_000)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for complexity.json and complexity.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Restricts the sweep to these detectors (repeatable).
    #[arg(long)]
    detector: Vec<DetectorChoice>,
    /// Output directory for results.csv, manifest.json and models/.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenData {
            common,
            detector,
            snr,
            count,
            out,
        } => {
            let cfg = common.load()?;
            let Some(kind) = detector.net_kind() else {
                bail!("datasets are written for network detectors, not {detector}");
            };
            let spec = cfg.detector_spec(kind, cfg.coherent);
            let phase = snr.map_or(Phase::Train, Phase::Test);
            let samples = generate_dataset(&cfg, &spec, phase, count.unwrap_or(cfg.num_train))?;
            let header = DatasetHeader {
                num_antennas: cfg.num_antennas,
                num_snapshots: cfg.num_snapshots,
                feature_dim: spec.input_dim(),
                coherence: if cfg.coherent { "coherent" } else { "noncoherent" }.into(),
                seed: cfg.seed,
            };
            fs::create_dir_all(&out)?;
            let name = match snr {
                Some(v) => format!("{}-test-{v}db.txt", spec.label()),
                None => format!("{}-train.txt", spec.label()),
            };
            let path = out.join(name);
            write_dataset(&path, &header, &samples)?;
            println!("wrote {} samples to {}", samples.len(), path.display());
        }
        Command::Train {
            common,
            detector,
            out,
        } => {
            let cfg = common.load()?;
            let Some(kind) = detector.net_kind() else {
                bail!("{detector} has nothing to train");
            };
            let start = Instant::now();
            let t = train_detector(&cfg, kind)?;
            fs::create_dir_all(&out)?;
            let path = save_trained(&out, &t.detector.spec.label(), &t)?;
            println!(
                "{}: loss {:.6} -> {:.6} over {} epochs in {:.1}s, wrote {}",
                t.detector.spec.label(),
                t.initial_loss,
                t.final_loss(),
                t.loss_history.len(),
                start.elapsed().as_secs_f64(),
                path.display()
            );
        }
        Command::Eval {
            common,
            model,
            detector,
            snr,
            out,
        } => {
            let cfg = common.load()?;
            let fbss = cfg.coherent;
            let estimator = match (model, detector) {
                (Some(p), _) => {
                    let det = Detector::from_model_file(&read_model(&p)?)?;
                    if det.spec.fbss.is_some() != fbss {
                        bail!("model {} was trained with fbss={}", p.display(), det.spec.fbss.is_some());
                    }
                    Estimator::Network(det)
                }
                (None, Some(DetectorChoice::Aic)) => Estimator::Criterion {
                    criterion: Criterion::Aic,
                    fbss: fbss.then_some(cfg.subarray_size),
                },
                (None, Some(DetectorChoice::Mdl)) => Estimator::Criterion {
                    criterion: Criterion::Mdl,
                    fbss: fbss.then_some(cfg.subarray_size),
                },
                _ => bail!("pass --model for networks or --detector aic|mdl"),
            };
            let rec = evaluate_estimator(&cfg, &estimator, snr.unwrap_or(cfg.test_snr_db))?;
            println!(
                "{} at {} dB, N={}: accuracy {:.4} over {} trials",
                rec.detector, rec.axis, cfg.num_snapshots, rec.accuracy, rec.n_trials
            );
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                emit_csv(&SweepResult { records: vec![rec] }, dir.join("results.csv"))?;
            }
        }
        Command::SweepSnapshots(args) => {
            no_fbss(&args)?;
            run_sweep(args, "sweep-snapshots", "num_snapshots", sweep_snapshots)?
        }
        Command::SweepSnr(args) => {
            no_fbss(&args)?;
            run_sweep(args, "sweep-snr", "snr_db", sweep_snr_noncoherent)?
        }
        Command::SweepSnrCoherent(args) => run_sweep(args, "sweep-snr-coherent", "snr_db", sweep_snr_coherent)?,
        Command::BenchComplexity {
            antennas,
            snapshots,
            hidden1,
            hidden2,
            iterations,
            seed,
            out,
        } => {
            let report = bench_complexity(antennas, snapshots, (hidden1, hidden2), iterations, seed)?;
            print!("{}", report.to_text());
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("complexity.json"), report.to_json()?)?;
                fs::write(dir.join("complexity.csv"), report.to_csv()?)?;
            }
        }
    }
    Ok(())
}

fn run_sweep(
    args: SweepArgs,
    command: &str,
    axis: &str,
    sweep: fn(&ExperimentConfig) -> srcnum::Result<SweepOutput>,
) -> Result<()> {
    let mut cfg = args.common.load()?;
    if !args.detector.is_empty() {
        cfg.detectors = args.detector;
    }
    let start = Instant::now();
    let out = sweep(&cfg)?;
    fs::create_dir_all(&args.out)?;
    emit_csv(&out.result, args.out.join("results.csv"))?;
    RunManifest::new(command, axis, &cfg, &out.result)?.write(args.out.join("manifest.json"))?;
    write_models(&args.out, &out)?;
    print_table(axis, &out.result);
    eprintln!("finished in {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}

fn no_fbss(args: &SweepArgs) -> Result<()> {
    if args.common.fbss.is_some() {
        bail!("--fbss applies to coherent sources; use sweep-snr-coherent");
    }
    Ok(())
}

/// Writes `<stem>.json` and `<stem>-loss.csv` into `dir`.
fn save_trained(dir: &Path, stem: &str, t: &TrainedDetector) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.json"));
    write_model(&path, &t.detector.to_model_file(Some(t.train_config.clone())))?;
    let mut curve = format!("epoch,loss\n0,{}\n", t.initial_loss);
    for (i, l) in t.loss_history.iter().enumerate() {
        curve.push_str(&format!("{},{l}\n", i + 1));
    }
    fs::write(dir.join(format!("{stem}-loss.csv")), curve)?;
    Ok(path)
}

fn write_models(dir: &Path, out: &SweepOutput) -> Result<()> {
    if out.trained.is_empty() {
        return Ok(());
    }
    let models = dir.join("models");
    fs::create_dir_all(&models)?;
    for (axis, t) in &out.trained {
        let stem = match axis {
            Some(a) => format!("{}-{a}", t.detector.spec.label()),
            None => t.detector.spec.label(),
        };
        save_trained(&models, &stem, t)?;
    }
    Ok(())
}

fn print_table(axis: &str, result: &SweepResult) {
    let detectors = result.detectors();
    print!("{axis:>14}");
    for d in &detectors {
        print!(" {d:>11}");
    }
    println!();
    for a in result.axis_values() {
        print!("{a:>14}");
        for d in &detectors {
            match result.accuracy(a, d) {
                Some(v) => print!(" {v:>11.4}"),
                None => print!(" {:>11}", "-"),
            }
        }
        println!();
    }
}
