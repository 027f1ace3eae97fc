use super::{apply_activation, Activation, Loss, Network, CCE_FLOOR};
use crate::error::{Error, Result};

/// Gradient of the loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradients shaped like a [`Network`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|g| *g = 0.0);
            l.bias.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|g| *g *= c);
            l.bias.iter_mut().for_each(|g| *g *= c);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
    }
}

/// Reusable buffers for one forward/backward pass.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

/// Adds the gradient of `loss(net(x), label)` into `grads` and returns the
/// sample loss.
pub(crate) fn accumulate(
    net: &Network,
    x: &[f64],
    label: &[f64],
    loss: Loss,
    grads: &mut Gradients,
    s: &mut Scratch,
) -> f64 {
    let layers = net.layers();
    let depth = layers.len();
    s.acts.resize_with(depth + 1, Vec::new);
    s.pre.resize_with(depth, Vec::new);
    s.acts[0].clear();
    s.acts[0].extend_from_slice(x);
    for (l, layer) in layers.iter().enumerate() {
        let (before, after) = s.acts.split_at_mut(l + 1);
        layer.pre_activation(&before[l], &mut s.pre[l]);
        after[0].clear();
        after[0].extend_from_slice(&s.pre[l]);
        apply_activation(layer.activation, &mut after[0]);
    }
    let pred = &s.acts[depth];
    let value = loss.sample(pred, label);

    // Output delta: dL/dz for the last layer.
    let out_act = layers[depth - 1].activation;
    s.delta.clear();
    if out_act == Activation::Softmax && loss == Loss::CategoricalCrossEntropy {
        s.delta.extend(pred.iter().zip(label).map(|(p, y)| p - y));
    } else {
        s.delta.extend(pred.iter().zip(label).map(|(&p, &y)| match loss {
            Loss::L2 => 2.0 * (p - y),
            Loss::CategoricalCrossEntropy => {
                if y == 0.0 {
                    0.0
                } else {
                    -y / p.max(CCE_FLOOR)
                }
            }
        }));
        match out_act {
            Activation::Linear => {}
            Activation::Relu => {
                for (d, z) in s.delta.iter_mut().zip(&s.pre[depth - 1]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            Activation::Softmax => {
                let dot: f64 = s.delta.iter().zip(pred).map(|(g, p)| g * p).sum();
                for (d, p) in s.delta.iter_mut().zip(pred) {
                    *d = p * (*d - dot);
                }
            }
        }
    }

    for l in (0..depth).rev() {
        let layer = &layers[l];
        let input = &s.acts[l];
        let g = &mut grads.layers[l];
        for (o, &d) in s.delta.iter().enumerate() {
            g.bias[o] += d;
            if d != 0.0 {
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
        }
        if l == 0 {
            break;
        }
        s.next_delta.clear();
        s.next_delta.resize(layer.inputs, 0.0);
        for (o, &d) in s.delta.iter().enumerate() {
            if d != 0.0 {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (nd, w) in s.next_delta.iter_mut().zip(row) {
                    *nd += d * w;
                }
            }
        }
        // Hidden layers are ReLU; derivative at exactly 0 is taken as 0.
        for (nd, z) in s.next_delta.iter_mut().zip(&s.pre[l - 1]) {
            if *z <= 0.0 {
                *nd = 0.0;
            }
        }
        std::mem::swap(&mut s.delta, &mut s.next_delta);
    }
    value
}

/// Analytic gradient of the single-sample loss.
pub fn backward(net: &Network, x: &[f64], label: &[f64], loss: Loss) -> Result<Gradients> {
    if x.len() != net.input_dim() || label.len() != net.output_dim() {
        return Err(Error::Dimension(format!(
            "sample ({}, {}) for a {}→{} network",
            x.len(),
            label.len(),
            net.input_dim(),
            net.output_dim()
        )));
    }
    let mut grads = Gradients::zeros_like(net);
    accumulate(net, x, label, loss, &mut grads, &mut Scratch::default());
    Ok(grads)
}
