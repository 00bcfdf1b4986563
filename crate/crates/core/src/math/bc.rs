//! Behavioral cloning: supervised cross-entropy training with a 70/30
//! train/validation split, Adam, and patience-based early stopping.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax, log_sum_exp, Adam, Gradients, PolicyNet, Workspace};
use crate::error::{Error, Result};
use crate::seed;

const SPLIT_STREAM: u64 = 0x5b1;
const INIT_STREAM: u64 = 0x1a7;
const SHUFFLE_STREAM: u64 = 0x5f1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Early-stopping patience, in epochs without a strict validation improvement.
    pub wait_for: usize,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_val_fraction() -> f64 {
    0.30
}

impl TrainConfig {
    /// Architect's behavioral-cloning defaults.
    pub fn architect() -> Self {
        Self { learning_rate: 5e-4, epochs: 1000, batch_size: 256, wait_for: 300, val_fraction: 0.30, seed: 0 }
    }

    /// Builder's self-imitation defaults.
    pub fn builder() -> Self {
        Self { learning_rate: 1e-4, epochs: 1000, batch_size: 256, wait_for: 300, val_fraction: 0.30, seed: 0 }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning_rate must be positive"));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.wait_for == 0 {
            return Err(Error::config("epochs, batch_size and wait_for must be positive"));
        }
        if self.wait_for > self.epochs {
            return Err(Error::config("wait_for must not exceed epochs"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::config("val_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Feature vectors paired with action labels.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::Dimension { expected: inputs.len(), got: labels.len() });
        }
        Ok(Self { inputs, labels })
    }

    pub fn push(&mut self, x: Vec<f64>, label: usize) {
        self.inputs.push(x);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub stopped_early: bool,
    pub train_size: usize,
    pub val_size: usize,
}

impl TrainHistory {
    pub fn epochs_run(&self) -> usize {
        self.val_accuracy.len()
    }
}

/// Sizes of the (train, validation) split for `n` samples.
///
/// With too few samples for a validation set, everything is used for training
/// and accuracy is measured on the training set.
pub fn split_sizes(n: usize, val_fraction: f64) -> (usize, usize) {
    let val = ((n as f64 * val_fraction).round() as usize).min(n.saturating_sub(1));
    (n - val, val)
}

pub fn accuracy(net: &PolicyNet, inputs: &[&[f64]], labels: &[usize]) -> Result<f64> {
    Ok(evaluate(net, inputs, labels)?.0)
}

/// `(accuracy, mean cross-entropy)` over labelled samples.
fn evaluate(net: &PolicyNet, inputs: &[&[f64]], labels: &[usize]) -> Result<(f64, f64)> {
    let mut ws = Workspace::for_net(net);
    let mut hits = 0usize;
    let mut loss = 0.0;
    for (x, &a) in inputs.iter().zip(labels) {
        let logits = net.forward_with(x, &mut ws)?;
        if argmax(logits) == a {
            hits += 1;
        }
        loss += log_sum_exp(logits) - logits[a];
    }
    let n = labels.len().max(1) as f64;
    Ok((hits as f64 / n, loss / n))
}

/// Trains a freshly initialized copy of `template`'s architecture.
///
/// The template only contributes its layer widths; its weights are never
/// read. Patience counts epochs since the last strict gain in validation
/// accuracy. The returned network is the snapshot with the best validation
/// accuracy, ties going to the later epoch.
pub fn bc_train(template: &PolicyNet, data: &Dataset, cfg: &TrainConfig) -> Result<(PolicyNet, TrainHistory)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let outputs = template.output_width();
    if let Some(&bad) = data.labels.iter().find(|&&a| a >= outputs) {
        return Err(Error::LabelOutOfRange { label: bad, outputs });
    }
    if let Some(x) = data.inputs.iter().find(|x| x.len() != template.input_width()) {
        return Err(Error::Dimension { expected: template.input_width(), got: x.len() });
    }

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut seed::rng(cfg.seed, &[SPLIT_STREAM]));
    let (n_train, n_val) = split_sizes(data.len(), cfg.val_fraction);
    let mut train_idx = order[..n_train].to_vec();
    let val_idx = if n_val == 0 { order.clone() } else { order[n_train..].to_vec() };
    let val_x: Vec<&[f64]> = val_idx.iter().map(|&i| data.inputs[i].as_slice()).collect();
    let val_y: Vec<usize> = val_idx.iter().map(|&i| data.labels[i]).collect();

    let mut net = PolicyNet::new(&template.layer_dims(), seed::derive(cfg.seed, &[INIT_STREAM]))?;
    let mut adam = Adam::for_net(&net, cfg.learning_rate);
    let mut grads = Gradients::zeros_like(&net);
    let mut ws = Workspace::for_net(&net);
    let (mut delta, mut delta_prev) = (Vec::new(), Vec::new());
    let mut shuffle_rng = seed::rng(cfg.seed, &[SHUFFLE_STREAM]);

    let mut history = TrainHistory { train_size: n_train, val_size: n_val, best_val_accuracy: f64::NEG_INFINITY, ..Default::default() };
    let mut best = net.clone();

    for epoch in 0..cfg.epochs {
        train_idx.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(cfg.batch_size) {
            grads.clear();
            for &i in batch {
                epoch_loss += net.accumulate_gradient(
                    &data.inputs[i],
                    data.labels[i],
                    &mut grads,
                    &mut ws,
                    &mut delta,
                    &mut delta_prev,
                )?;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut net, &grads)?;
        }
        history.train_loss.push(epoch_loss / n_train as f64);

        let (acc, _) = evaluate(&net, &val_x, &val_y)?;
        history.val_accuracy.push(acc);
        // A tie refreshes the snapshot but not the patience clock.
        if acc > history.best_val_accuracy {
            history.best_val_accuracy = acc;
            history.best_epoch = epoch;
        }
        if acc >= history.best_val_accuracy {
            best.clone_from(&net);
        }
        if epoch - history.best_epoch >= cfg.wait_for {
            history.stopped_early = true;
            break;
        }
    }
    Ok((best, history))
}
