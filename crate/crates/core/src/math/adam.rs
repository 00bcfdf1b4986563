//! Adam with the usual constants (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).

use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, learning_rate: f64) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Dimension { expected: params.len(), got: grads.len() });
    }
    if state.m.len() != params.len() {
        return Err(Error::Dimension { expected: params.len(), got: state.m.len() });
    }
    state.t += 1;
    let c1 = 1.0 - BETA1.powi(state.t as i32);
    let c2 = 1.0 - BETA2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = BETA1 * state.m[i] + (1.0 - BETA1) * g;
        state.v[i] = BETA2 * state.v[i] + (1.0 - BETA2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= learning_rate * m_hat / (v_hat.sqrt() + EPSILON);
    }
    Ok(())
}

/// Adam over every tensor of a network.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn for_net(net: &super::PolicyNet, learning_rate: f64) -> Self {
        Self { learning_rate, states: net.tensors().map(|t| AdamState::new(t.len())).collect() }
    }

    pub fn step(&mut self, net: &mut super::PolicyNet, grads: &super::Gradients) -> Result<()> {
        for ((p, g), s) in net.tensors_mut().zip(grads.tensors()).zip(self.states.iter_mut()) {
            adam_step(p, g, s, self.learning_rate)?;
        }
        Ok(())
    }
}
