use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Samples farther than this many standard deviations are redrawn.
pub const TRUNCATION_STDS: f64 = 2.0;

/// `rows × cols` row-major weights from a normal with variance `1/fan_in`,
/// redrawing anything beyond two standard deviations.
pub fn init_truncated_normal(shape: (usize, usize), fan_in: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if fan_in == 0 {
        return Err(Error::Config("fan-in must be at least 1".into()));
    }
    let std = 1.0 / (fan_in as f64).sqrt();
    let count = shape.0 * shape.1;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= TRUNCATION_STDS {
            out.push(z * std);
        }
    }
    Ok(out)
}

/// Exact variance of the two-sided truncated normal produced by
/// [`init_truncated_normal`]: `σ²·(1 − 2a·φ(a)/(2Φ(a) − 1))` with `a = 2`.
pub fn truncated_normal_variance(fan_in: usize) -> f64 {
    let a = TRUNCATION_STDS;
    let pdf = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // 2Φ(2) − 1 = erf(2/√2); computed by series to stay dependency-free.
    let mass = erf(a / std::f64::consts::SQRT_2);
    (1.0 - 2.0 * a * pdf / mass) / fan_in as f64
}

fn erf(x: f64) -> f64 {
    // Maclaurin series; converges quickly for |x| ≤ 2.
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= -x * x / n;
        sum += term / (2.0 * n + 1.0);
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}
