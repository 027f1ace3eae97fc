//! Invariant checks shared by the property suite and the acceptance target.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use srcnum::classical::{aic, mdl, EigenSpectrum};
use srcnum::experiments::{emit_csv, sweep_snr_noncoherent, DetectorChoice, ExperimentConfig};
use srcnum::linalg::{conj_transpose, hermitian_eig, matmul, ComplexMatrix};
use srcnum::neural::{
    adam_step, backward, softmax, Activation, AdamState, Gradients, Layer, Loss, Network, TrainConfig,
};
use srcnum::signal::{fbss_covariance, sample_covariance, Coherence, Scenario};
use srcnum::Complex64;

pub type Check = Result<(), String>;

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let b = ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let bh = conj_transpose(&b);
    b.add(&bh).unwrap().scale(0.5)
}

pub fn eig_reconstruction(a: &ComplexMatrix) -> Check {
    let e = hermitian_eig(a).map_err(|e| e.to_string())?;
    let norm = a.frobenius_norm();
    let residual = e.reconstruct().sub(a).unwrap().frobenius_norm();
    if residual > 1e-9 * norm.max(f64::MIN_POSITIVE) && residual > 0.0 {
        return Err(format!("reconstruction residual {residual:e} for norm {norm:e}"));
    }
    let n = a.rows();
    let gram = matmul(&conj_transpose(&e.eigenvectors), &e.eigenvectors).unwrap();
    let off = gram.sub(&ComplexMatrix::identity(n)).unwrap().frobenius_norm();
    if off > 1e-9 * (n as f64).max(1.0) {
        return Err(format!("eigenvectors not orthonormal: {off:e}"));
    }
    if e.eigenvalues.windows(2).any(|w| w[0] < w[1]) {
        return Err("eigenvalues not descending".into());
    }
    Ok(())
}

pub fn trace_identity(a: &ComplexMatrix) -> Check {
    let e = hermitian_eig(a).map_err(|e| e.to_string())?;
    let sum: f64 = e.eigenvalues.iter().sum();
    let tr = a.trace().re;
    if (sum - tr).abs() > 1e-9 * a.frobenius_norm().max(1.0) {
        return Err(format!("eigenvalue sum {sum} vs trace {tr}"));
    }
    Ok(())
}

/// Random noisy scenario, possibly with coherent copies.
pub fn random_scenario(rng: &mut impl Rng) -> Scenario {
    let k = rng.random_range(0..=4usize);
    let doas: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let coherence = if k >= 2 && rng.random_bool(0.5) {
        Coherence::Coherent {
            copy_map: vec![(k - 1, 0)],
        }
    } else {
        Coherence::NonCoherent
    };
    Scenario {
        num_antennas: 8,
        num_snapshots: rng.random_range(1..=40),
        doas,
        snr_db: rng.random_range(-5.0..30.0),
        coherence,
        seed: rng.random(),
    }
}

pub fn fbss_psd(scenario: &Scenario, subarray_size: usize) -> Check {
    let r = sample_covariance(&scenario.simulate().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let s = fbss_covariance(&r, subarray_size).map_err(|e| e.to_string())?;
    if !s.is_hermitian() {
        return Err("smoothed covariance is not Hermitian".into());
    }
    let e = hermitian_eig(&s).map_err(|e| e.to_string())?;
    let floor = -1e-10 * s.frobenius_norm().max(1.0);
    match e.eigenvalues.iter().find(|&&v| v < floor) {
        Some(v) => Err(format!("negative eigenvalue {v:e}")),
        None => Ok(()),
    }
}

/// Two fully coherent sources without noise: rank 1 before smoothing,
/// rank 2 after.
pub fn coherent_rank_restoration() -> Check {
    let sc = Scenario {
        num_antennas: 10,
        num_snapshots: 100,
        doas: vec![-0.4, 0.5],
        snr_db: f64::INFINITY,
        coherence: Coherence::Coherent {
            copy_map: vec![(1, 0)],
        },
        seed: 11,
    };
    let r = sample_covariance(&sc.simulate().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let full = hermitian_eig(&r).map_err(|e| e.to_string())?.eigenvalues;
    if full[1] > 1e-9 * full[0] {
        return Err(format!("unsmoothed second eigenvalue {:e} not negligible", full[1]));
    }
    let smoothed = hermitian_eig(&fbss_covariance(&r, 5).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .eigenvalues;
    if smoothed[1] <= 1e-6 * smoothed[0] {
        return Err(format!("smoothed second eigenvalue {:e} vs first {:e}", smoothed[1], smoothed[0]));
    }
    Ok(())
}

pub fn scale_invariant_argmin(values: &[f64], num_snapshots: usize, c: f64) -> Check {
    let base = EigenSpectrum::new(values.to_vec(), num_snapshots).map_err(|e| e.to_string())?;
    let scaled =
        EigenSpectrum::new(values.iter().map(|v| v * c).collect(), num_snapshots).map_err(|e| e.to_string())?;
    let (a0, a1) = (aic(&base).unwrap().estimate, aic(&scaled).unwrap().estimate);
    let (m0, m1) = (mdl(&base).unwrap().estimate, mdl(&scaled).unwrap().estimate);
    if a0 != a1 || m0 != m1 {
        return Err(format!("scaling by {c} moved AIC {a0}->{a1}, MDL {m0}->{m1}"));
    }
    Ok(())
}

/// Descending spectrum with a few dominant values over a noise floor.
pub fn random_spectrum(rng: &mut impl Rng) -> Vec<f64> {
    let m = rng.random_range(2..=12usize);
    let k = rng.random_range(0..m);
    let mut v: Vec<f64> = (0..m)
        .map(|i| {
            let noise = rng.random_range(0.5..1.5);
            if i < k {
                noise + rng.random_range(0.0..50.0)
            } else {
                noise
            }
        })
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn softmax_normalized(z: &[f64]) -> Check {
    let p = softmax(z);
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(format!("softmax sums to {sum}"));
    }
    if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err("softmax output outside [0, 1]".into());
    }
    let shifted: Vec<f64> = z.iter().map(|v| v + 100.0).collect();
    let q = softmax(&shifted);
    if p.iter().zip(&q).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err("softmax not shift invariant".into());
    }
    Ok(())
}

fn with_parameter(net: &Network, layer: usize, index: usize, delta: f64) -> Network {
    let mut layers: Vec<Layer> = net.layers().to_vec();
    let l = &mut layers[layer];
    if index < l.weights.len() {
        l.weights[index] += delta;
    } else {
        l.bias[index - l.weights.len()] += delta;
    }
    Network::new(layers).unwrap()
}

/// Largest relative error between backprop and central differences over all
/// parameters, with relative error `|a−n| / max(|a|, |n|, 1e-3)`.
pub fn max_gradient_error(net: &Network, x: &[f64], label: &[f64], loss: Loss) -> f64 {
    let grads = backward(net, x, label, loss).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (li, (layer, g)) in net.layers().iter().zip(&grads.layers).enumerate() {
        let analytic: Vec<f64> = g.weights.iter().chain(&g.bias).copied().collect();
        for (pi, a) in analytic.iter().enumerate().take(layer.weights.len() + layer.bias.len()) {
            let up = loss.sample(&with_parameter(net, li, pi, h).forward(x).unwrap(), label);
            let down = loss.sample(&with_parameter(net, li, pi, -h).forward(x).unwrap(), label);
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3));
        }
    }
    worst
}

/// Random 10-8-8-10 softmax network with random biases and a random input,
/// redrawn until no hidden unit sits within 1e-4 of the ReLU kink (where the
/// loss is not differentiable).
pub fn random_classifier_point(rng: &mut impl Rng) -> (Network, Vec<f64>) {
    loop {
        let net = Network::init(&[10, 8, 8, 10], Activation::Softmax, rng).unwrap();
        let layers: Vec<Layer> = net
            .layers()
            .iter()
            .map(|l| {
                let mut l = l.clone();
                l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
                l
            })
            .collect();
        let net = Network::new(layers).unwrap();
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut a = x.clone();
        let mut z = Vec::new();
        let mut near_kink = false;
        for l in &net.layers()[..net.layers().len() - 1] {
            l.pre_activation(&a, &mut z);
            near_kink |= z.iter().any(|v| v.abs() < 1e-4);
            a = z.iter().map(|v| v.max(0.0)).collect();
        }
        if !near_kink {
            return (net, x);
        }
    }
}

pub fn gradient_check(net: &Network, x: &[f64], label: &[f64]) -> Check {
    let err = max_gradient_error(net, x, label, Loss::CategoricalCrossEntropy);
    if err < 1e-5 {
        Ok(())
    } else {
        Err(format!("gradient relative error {err:e}"))
    }
}

pub fn adam_zero_gradient_fixed_point(net: &Network, steps: usize) -> Check {
    let mut moved = net.clone();
    let mut state = AdamState::new(net);
    let zero = Gradients::zeros_like(net);
    for _ in 0..steps {
        adam_step(&mut state, &mut moved, &zero, &TrainConfig::default()).map_err(|e| e.to_string())?;
    }
    if &moved != net {
        return Err("zero gradient moved the parameters".into());
    }
    Ok(())
}

pub fn mini_sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        num_train: 300,
        num_test_per_point: 200,
        epochs: 5,
        seed: 2024,
        snr_axis_db: vec![0.0, 10.0, 20.0],
        detectors: DetectorChoice::ALL.to_vec(),
        ..Default::default()
    }
}

/// Runs the mini sweep twice and compares records, trained parameters and
/// CSV bytes.
pub fn mini_sweep_reproducible() -> Check {
    let cfg = mini_sweep_config();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    let mut outs = Vec::new();
    for i in 0..2 {
        let out = sweep_snr_noncoherent(&cfg).map_err(|e| e.to_string())?;
        let p = dir.path().join(format!("run{i}.csv"));
        emit_csv(&out.result, &p).map_err(|e| e.to_string())?;
        csv.push(std::fs::read(&p).map_err(|e| e.to_string())?);
        outs.push(out);
    }
    if outs[0].result != outs[1].result || csv[0] != csv[1] {
        return Err("sweep results differ between runs".into());
    }
    let params = |o: &srcnum::experiments::SweepOutput| -> Vec<u64> {
        o.trained
            .iter()
            .flat_map(|(_, t)| t.detector.network.layers().to_vec())
            .flat_map(|l| l.weights.into_iter().chain(l.bias))
            .map(f64::to_bits)
            .collect()
    };
    if params(&outs[0]) != params(&outs[1]) {
        return Err("trained parameters differ between runs".into());
    }
    Ok(())
}
