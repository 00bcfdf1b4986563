//! Dense feed-forward policy networks.
//!
//! Hidden layers use a rectifier, the output layer is linear and produces
//! action logits. Weights are stored row-major (`outputs x inputs`).

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// One affine layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn apply(&self, x: &[f64], out: &mut [f64], rectify: bool) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weights[j * self.inputs..(j + 1) * self.inputs];
            let z = self.bias[j] + dot(row, x);
            *o = if rectify { z.max(0.0) } else { z };
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators keep the loop vectorizable while the summation order
    // stays fixed, so results are bit-identical run to run.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// A feed-forward network mapping features to action logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet {
    layers: Vec<Dense>,
}

/// Reusable activation buffers for allocation-free forward passes.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
}

impl Workspace {
    pub fn for_net(net: &PolicyNet) -> Self {
        let mut acts = vec![vec![0.0; net.input_width()]];
        acts.extend(net.layers.iter().map(|l| vec![0.0; l.outputs]));
        Self { acts }
    }

    fn fits(&self, net: &PolicyNet) -> bool {
        self.acts.len() == net.layers.len() + 1
            && self.acts[0].len() == net.input_width()
            && self.acts.iter().skip(1).zip(&net.layers).all(|(a, l)| a.len() == l.outputs)
    }
}

/// Per-tensor gradients, laid out like the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &PolicyNet) -> Self {
        Self { layers: net.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w *= k);
            l.bias.iter_mut().for_each(|b| *b *= k);
        }
    }

    /// Tensors in the same order as [`PolicyNet::tensors_mut`].
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 3 {
        return Err(Error::config(format!(
            "a policy network needs input, at least one hidden and an output width; got {layer_dims:?}"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::config(format!("layer widths must be positive; got {layer_dims:?}")));
    }
    Ok(())
}

impl PolicyNet {
    /// Fresh network with weights and biases drawn uniformly from
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, deterministic in `seed`.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = seed::rng(seed, &[]);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = 1.0 / (inputs as f64).sqrt();
                let mut layer = Dense::zeros(inputs, outputs);
                for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                    *v = rng.random_range(-bound..=bound);
                }
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    /// All-zero network; its logits are zero for every input.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        validate_dims(layer_dims)?;
        Ok(Self { layers: layer_dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect() })
    }

    /// Builds a network from explicit layers. Consecutive widths must chain.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::config("layer tensor sizes do not match declared widths"));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Dimension { expected: pair[0].outputs, got: pair[1].inputs });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_width()];
        dims.extend(self.layers.iter().map(|l| l.outputs));
        dims
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Weight and bias tensors, in layer order.
    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    /// Logits for one feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::for_net(self);
        Ok(self.forward_with(x, &mut ws)?.to_vec())
    }

    /// Logits for one feature vector, reusing `ws` for intermediate buffers.
    pub fn forward_with<'w>(&self, x: &[f64], ws: &'w mut Workspace) -> Result<&'w [f64]> {
        if x.len() != self.input_width() {
            return Err(Error::Dimension { expected: self.input_width(), got: x.len() });
        }
        if !ws.fits(self) {
            *ws = Workspace::for_net(self);
        }
        ws.acts[0].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (head, tail) = ws.acts.split_at_mut(i + 1);
            layer.apply(&head[i], &mut tail[0], i != last);
        }
        Ok(&ws.acts[last + 1])
    }

    /// Accumulates the cross-entropy gradient for `(x, label)` into `grads`
    /// and returns the sample loss `-log softmax(logits)[label]`.
    pub fn accumulate_gradient(
        &self,
        x: &[f64],
        label: usize,
        grads: &mut Gradients,
        ws: &mut Workspace,
        delta: &mut Vec<f64>,
        delta_prev: &mut Vec<f64>,
    ) -> Result<f64> {
        if label >= self.output_width() {
            return Err(Error::LabelOutOfRange { label, outputs: self.output_width() });
        }
        self.forward_with(x, ws)?;
        let last = self.layers.len() - 1;
        let logits = &ws.acts[last + 1];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        let loss = log_z - logits[label];

        delta.clear();
        delta.extend(logits.iter().map(|z| (z - log_z).exp()));
        delta[label] -= 1.0;

        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &ws.acts[i];
            let g = &mut grads.layers[i];
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[j] += d;
                let row = &mut g.weights[j * layer.inputs..(j + 1) * layer.inputs];
                for (w, &xi) in row.iter_mut().zip(input) {
                    *w += d * xi;
                }
            }
            if i == 0 {
                break;
            }
            delta_prev.clear();
            delta_prev.resize(layer.inputs, 0.0);
            for (j, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[j * layer.inputs..(j + 1) * layer.inputs];
                for (p, &w) in delta_prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            // Rectifier derivative, read off the post-activation values.
            for (p, &a) in delta_prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            std::mem::swap(delta, delta_prev);
        }
        Ok(loss)
    }

    /// Mean cross-entropy over a set of samples.
    pub fn mean_loss(&self, xs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
        let mut ws = Workspace::for_net(self);
        let mut total = 0.0;
        for (x, &a) in xs.iter().zip(labels) {
            let logits = self.forward_with(x, &mut ws)?;
            total += super::sample::log_sum_exp(logits) - logits[a];
        }
        Ok(total / xs.len() as f64)
    }

    /// 64-bit FNV-1a digest of every parameter's bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.tensors() {
            for v in t {
                for b in v.to_bits().to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}
