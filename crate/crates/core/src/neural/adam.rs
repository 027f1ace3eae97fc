use super::{Gradients, Network, TrainConfig};
use crate::error::{Error, Result};

/// First/second moment accumulators mirroring a network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Gradients,
    pub second: Gradients,
    pub step: u64,
}

impl AdamState {
    pub fn new(net: &Network) -> Self {
        Self {
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
            step: 0,
        }
    }
}

/// One bias-corrected ADAM update:
///
/// ```text
/// m ← β₁m + (1−β₁)g,  v ← β₂v + (1−β₂)g²
/// w ← w − α·(m/(1−β₁ᵗ)) / (√(v/(1−β₂ᵗ)) + ε)
/// ```
pub fn adam_step(state: &mut AdamState, net: &mut Network, grads: &Gradients, config: &TrainConfig) -> Result<()> {
    if grads.layers.len() != net.layers().len() || state.first.layers.len() != net.layers().len() {
        return Err(Error::Dimension("gradient and network depth differ".into()));
    }
    for ((layer, g), m) in net.layers().iter().zip(&grads.layers).zip(&state.first.layers) {
        if g.weights.len() != layer.weights.len()
            || g.bias.len() != layer.bias.len()
            || m.weights.len() != layer.weights.len()
        {
            return Err(Error::Dimension("gradient and layer shapes differ".into()));
        }
    }
    state.step += 1;
    let (b1, b2, eps, lr) = (
        config.adam_beta1,
        config.adam_beta2,
        config.adam_epsilon,
        config.learning_rate,
    );
    let t = state.step as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let update = |w: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..w.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            w[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for (l, layer) in net.layers_mut().iter_mut().enumerate() {
        let g = &grads.layers[l];
        let m = &mut state.first.layers[l];
        let v = &mut state.second.layers[l];
        update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
        update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
    Ok(())
}
