//! Fully-connected networks trained from scratch.
//!
//! A [`Network`] is a chain of dense layers `f(x) = g(W·x + b)`. Hidden
//! layers use ReLU; the output layer is linear (regression) or softmax
//! (classification). Gradients are computed analytically and parameters are
//! updated with ADAM.

mod adam;
mod backprop;
mod init;
mod loss;
mod model_file;
mod train;

pub use adam::{adam_step, AdamState};
pub use backprop::{backward, Gradients, LayerGradients};
pub use init::{init_truncated_normal, truncated_normal_variance, TRUNCATION_STDS};
pub use loss::{loss_cce, loss_l2, Loss, CCE_FLOOR};
pub use model_file::{read_model, write_model, ModelFile, MODEL_FORMAT};
pub use train::{evaluate_loss, train, Dataset, TrainConfig, TrainOutcome};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opcount::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

/// Dense layer with row-major `outputs × inputs` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::Dimension(format!(
                "layer {inputs}->{outputs} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// `W·x + b`.
    pub fn pre_activation(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b
        }));
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Layered model; see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Dimension(format!(
                    "layer output {} does not feed layer input {}",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        let last = layers.len() - 1;
        for (i, layer) in layers.iter().enumerate() {
            match layer.activation {
                Activation::Softmax if i != last => {
                    return Err(Error::Config("softmax is only allowed on the output layer".into()))
                }
                Activation::Relu if i == last && last > 0 => {
                    return Err(Error::Config("relu is only allowed on hidden layers".into()))
                }
                _ => {}
            }
        }
        Ok(Self { layers })
    }

    /// Network with layer sizes `sizes`, ReLU hidden layers and the given
    /// output activation, weights drawn by [`init_truncated_normal`] and
    /// zero biases.
    pub fn init(sizes: &[usize], output: Activation, rng: &mut impl Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (i, w) in sizes.windows(2).enumerate() {
            let act = if i + 2 == sizes.len() { output } else { Activation::Relu };
            let weights = init_truncated_normal((w[1], w[0]), w[0], rng)?;
            layers.push(Layer::new(w[0], w[1], weights, vec![0.0; w[1]], act)?);
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// Layer widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(Layer::num_parameters).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input of length {} for a network expecting {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.pre_activation(&cur, &mut next);
            apply_activation(layer.activation, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Forward pass up to the output pre-activation (logits), in any
    /// [`Real`] arithmetic. Used for operation counting.
    pub fn logits_generic<T: Real>(&self, x: &[T]) -> Vec<T> {
        let zero = T::from_f64(0.0);
        let mut cur: Vec<T> = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(layer.outputs);
            for (row, &b) in layer.weights.chunks_exact(layer.inputs).zip(&layer.bias) {
                let mut acc = T::from_f64(row[0]) * cur[0];
                for (w, &xi) in row.iter().zip(&cur).skip(1) {
                    acc = acc + T::from_f64(*w) * xi;
                }
                next.push(acc + T::from_f64(b));
            }
            if i + 1 < self.layers.len() && layer.activation == Activation::Relu {
                for v in &mut next {
                    if *v < zero {
                        *v = zero;
                    }
                }
            }
            cur = next;
        }
        cur
    }
}

pub(crate) fn apply_activation(act: Activation, z: &mut [f64]) {
    match act {
        Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Linear => {}
        Activation::Softmax => softmax_in_place(z),
    }
}

/// Elementwise `max(0, z)`.
pub fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| v.max(0.0)).collect()
}

/// Max-shifted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    out
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}
