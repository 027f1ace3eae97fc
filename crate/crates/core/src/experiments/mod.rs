//! Dataset generation, training orchestration, accuracy sweeps, reports
//! and the complexity benchmark.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod report;
pub mod sweep;

pub use bench::{bench_complexity, ComplexityReport, ComplexityRow};
pub use config::{DetectorChoice, ExperimentConfig};
pub use dataset::{
    draw_scenario, generate_dataset, label_trials, mix, read_dataset, simulate_trials, to_training_set, write_dataset,
    DatasetHeader, LabeledSample, Phase, Trial, TrialStream,
};
pub use report::{emit_csv, parse_csv, read_csv, write_csv, RunManifest};
pub use sweep::{
    count_correct, estimate_all, evaluate_estimator, sweep_snapshots, sweep_snr_coherent, sweep_snr_noncoherent,
    train_detector, train_on_trials, train_stream, Estimator, SweepOutput, SweepRecord, SweepResult, TrainedDetector,
};
