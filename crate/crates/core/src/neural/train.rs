use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::backprop::{accumulate, Scratch};
use super::{adam_step, AdamState, Gradients, Loss, Network};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 400,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            loss: Loss::L2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        for b in [self.adam_beta1, self.adam_beta2] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("ADAM beta {b} outside [0, 1)")));
            }
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return Err(Error::Config("ADAM epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Paired inputs and targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    /// Mean training loss of each epoch, averaged over the mini-batches as
    /// they were visited.
    pub loss_history: Vec<f64>,
}

/// Mean loss of `net` over the whole dataset.
pub fn evaluate_loss(net: &Network, data: &Dataset, loss: Loss) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        total += loss.sample(&net.forward(x)?, y);
    }
    Ok(total / data.len() as f64)
}

/// Mini-batch ADAM training.
///
/// Each epoch reshuffles the sample order with a generator derived from
/// `config.seed`; the final short batch is kept. Gradients are averaged over
/// the batch.
pub fn train(mut net: Network, data: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        if x.len() != net.input_dim() || y.len() != net.output_dim() {
            return Err(Error::Dimension(format!(
                "sample ({}, {}) for a {}→{} network",
                x.len(),
                y.len(),
                net.input_dim(),
                net.output_dim()
            )));
        }
    }

    let mut shuffle_rng = rng::stream(config.seed, Domain::Shuffle, 0);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut adam = AdamState::new(&net);
    let mut grads = Gradients::zeros_like(&net);
    let mut scratch = Scratch::default();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_total = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            grads.fill_zero();
            let mut batch_total = 0.0;
            for &i in batch {
                batch_total += accumulate(&net, &data.inputs[i], &data.targets[i], config.loss, &mut grads, &mut scratch);
            }
            if !batch_total.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    loss: batch_total / batch.len() as f64,
                });
            }
            epoch_total += batch_total;
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut adam, &mut net, &grads, config)?;
        }
        history.push(epoch_total / data.len() as f64);
    }
    Ok(TrainOutcome {
        network: net,
        loss_history: history,
    })
}
