//! Array snapshot simulation, sample covariance, and forward-backward
//! spatial smoothing.
//!
//! The array is a half-wavelength uniform linear array. Each source has unit
//! power; the per-antenna noise variance is `σ² = 10^(−snr_db/10)`, so an
//! `snr_db` of `+∞` gives noise-free data.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{exchange_conjugate, ComplexMatrix};

/// Maximum redraws when sampling pairwise distinct DOAs.
pub const DOA_MAX_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum Coherence {
    NonCoherent,
    /// Each `(coherent, independent)` pair makes source row `coherent` an
    /// exact copy of source row `independent`.
    Coherent { copy_map: Vec<(usize, usize)> },
}

impl Coherence {
    pub fn num_coherent(&self) -> usize {
        match self {
            Coherence::NonCoherent => 0,
            Coherence::Coherent { copy_map } => copy_map.len(),
        }
    }
}

/// One simulation draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub num_antennas: usize,
    pub num_snapshots: usize,
    /// Directions of arrival in radians; its length is the source count.
    pub doas: Vec<f64>,
    pub snr_db: f64,
    pub coherence: Coherence,
    pub seed: u64,
}

impl Scenario {
    pub fn num_sources(&self) -> usize {
        self.doas.len()
    }

    /// Per-antenna noise variance.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, k) = (self.num_antennas, self.num_sources());
        if m == 0 {
            return Err(Error::Config("array needs at least one antenna".into()));
        }
        if k >= m {
            return Err(Error::Config(format!("{k} sources need more than {m} antennas")));
        }
        for (i, a) in self.doas.iter().enumerate() {
            if self.doas[..i].contains(a) {
                return Err(Error::Config(format!("duplicate DOA {a}")));
            }
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("SNR is NaN".into()));
        }
        if let Coherence::Coherent { copy_map } = &self.coherence {
            let coherent: Vec<usize> = copy_map.iter().map(|&(c, _)| c).collect();
            for (i, &(c, target)) in copy_map.iter().enumerate() {
                if c >= k || target >= k {
                    return Err(Error::Config(format!("copy {c}→{target} out of range for {k} sources")));
                }
                if coherent[..i].contains(&c) {
                    return Err(Error::Config(format!("source {c} copied twice")));
                }
                if coherent.contains(&target) {
                    return Err(Error::Config(format!(
                        "copy {c}→{target} targets a coherent source"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Snapshots drawn from this scenario's own seed.
    pub fn simulate(&self) -> Result<SnapshotBatch> {
        generate_snapshots(self, &mut crate::rng::from_seed(self.seed))
    }
}

/// `M×N` array output together with the scenario that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBatch {
    pub data: ComplexMatrix,
    pub scenario: Scenario,
}

/// ULA response: element `m` is `exp(i·π·m·sin θ)`.
pub fn steering_vector(theta: f64, num_antennas: usize) -> Vec<Complex64> {
    let phase = PI * theta.sin();
    (0..num_antennas)
        .map(|m| Complex64::from_polar(1.0, phase * m as f64))
        .collect()
}

/// `M×K` steering matrix.
pub fn steering_matrix(doas: &[f64], num_antennas: usize) -> ComplexMatrix {
    let cols: Vec<Vec<Complex64>> = doas.iter().map(|&t| steering_vector(t, num_antennas)).collect();
    ComplexMatrix::from_fn(num_antennas, doas.len(), |m, k| cols[k][m])
}

/// Circular complex Gaussian sample with variance `var`.
fn complex_gaussian(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `K×N` source waveforms. Independent rows are unit-power circular complex
/// Gaussian; coherent rows copy their target row exactly.
pub fn generate_sources(scenario: &Scenario, rng: &mut impl Rng) -> Result<ComplexMatrix> {
    scenario.validate()?;
    let (k, n) = (scenario.num_sources(), scenario.num_snapshots);
    let mut copy_of: Vec<Option<usize>> = vec![None; k];
    if let Coherence::Coherent { copy_map } = &scenario.coherence {
        for &(c, target) in copy_map {
            copy_of[c] = Some(target);
        }
    }
    let mut s = ComplexMatrix::zeros(k, n);
    for row in 0..k {
        if copy_of[row].is_none() {
            for col in 0..n {
                s[(row, col)] = complex_gaussian(rng, 1.0);
            }
        }
    }
    for row in 0..k {
        if let Some(target) = copy_of[row] {
            for col in 0..n {
                s[(row, col)] = s[(target, col)];
            }
        }
    }
    Ok(s)
}

/// `A(θ)·S + W`.
pub fn generate_snapshots(scenario: &Scenario, rng: &mut impl Rng) -> Result<SnapshotBatch> {
    let sources = generate_sources(scenario, rng)?;
    let (m, n) = (scenario.num_antennas, scenario.num_snapshots);
    let a = steering_matrix(&scenario.doas, m);
    let mut data = crate::linalg::matmul(&a, &sources)?;
    let var = scenario.noise_variance();
    for i in 0..m {
        for j in 0..n {
            let w = complex_gaussian(rng, 1.0);
            if var > 0.0 {
                data[(i, j)] += w * var.sqrt();
            }
        }
    }
    Ok(SnapshotBatch {
        data,
        scenario: scenario.clone(),
    })
}

/// `(1/N)·Σ r(n)·r(n)^H`, exactly Hermitian.
pub fn sample_covariance(batch: &SnapshotBatch) -> Result<ComplexMatrix> {
    let x = &batch.data;
    let (m, n) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::Config("sample covariance needs at least one snapshot".into()));
    }
    let mut r = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let acc: Complex64 = (0..n).map(|t| x[(i, t)] * x[(j, t)].conj()).sum();
            let v = acc / n as f64;
            if i == j {
                r[(i, i)] = Complex64::new(v.re, 0.0);
            } else {
                r[(i, j)] = v;
                r[(j, i)] = v.conj();
            }
        }
    }
    Ok(r)
}

/// Forward-backward averaged covariance of size `M0`.
///
/// The `t`-th forward sub-covariance is the principal block of `r` at
/// offset `t`; its backward partner is `J·conj(·)·J`. All `2T` terms with
/// `T = M − M0 + 1` are averaged.
pub fn fbss_covariance(r: &ComplexMatrix, subarray_size: usize) -> Result<ComplexMatrix> {
    if !r.is_square() {
        return Err(Error::Dimension(format!("{}x{} covariance", r.rows(), r.cols())));
    }
    let m = r.rows();
    if subarray_size == 0 || subarray_size > m {
        return Err(Error::Config(format!(
            "sub-array size {subarray_size} outside 1..={m}"
        )));
    }
    let t = m - subarray_size + 1;
    let mut acc = ComplexMatrix::zeros(subarray_size, subarray_size);
    for offset in 0..t {
        let fwd = r.principal_block(offset, subarray_size)?;
        let bwd = exchange_conjugate(&fwd)?;
        acc = acc.add(&fwd)?.add(&bwd)?;
    }
    Ok(acc.scale(1.0 / (2 * t) as f64))
}

/// `count` pairwise distinct angles drawn uniformly from `[0, 2π)`.
pub fn draw_distinct_doas(count: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let mut doas = Vec::with_capacity(count);
    let mut retries = 0;
    while doas.len() < count {
        let theta = rng.random_range(0.0..2.0 * PI);
        if doas.contains(&theta) {
            retries += 1;
            if retries > DOA_MAX_RETRIES {
                return Err(Error::Config("could not draw distinct DOAs".into()));
            }
            continue;
        }
        doas.push(theta);
    }
    Ok(doas)
}
