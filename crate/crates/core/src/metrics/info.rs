//! Entropy and mutual-information diagnostics of a message-conditioned
//! policy over a fixed set of states, every message weighted uniformly.

use std::collections::HashMap;

use crate::builder::{BuilderAgent, Scratch};
use crate::error::Result;
use crate::math::entropy;
use crate::world::GridState;

/// `probs[s][m][a]` with the empirical state distribution `state_weights`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTable {
    pub state_weights: Vec<f64>,
    pub probs: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricReport {
    pub mean_entropy: f64,
    pub mi_messages: f64,
    pub mi_states: f64,
}

impl PolicyTable {
    /// Table for equally weighted states.
    pub fn uniform_states(probs: Vec<Vec<Vec<f64>>>) -> Self {
        let n = probs.len();
        Self { state_weights: vec![1.0 / n as f64; n], probs }
    }

    /// Queries the builder's sampling distribution on every `(state, message)`.
    /// Repeated states are merged and weighted by multiplicity.
    pub fn from_builder(builder: &BuilderAgent, states: &[GridState]) -> Result<Self> {
        let mut index: HashMap<&GridState, usize> = HashMap::new();
        let mut distinct: Vec<&GridState> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for s in states {
            let i = *index.entry(s).or_insert_with(|| {
                distinct.push(s);
                counts.push(0.0);
                distinct.len() - 1
            });
            counts[i] += 1.0;
        }
        let mut scratch = Scratch::default();
        let mut probs = Vec::with_capacity(distinct.len());
        for s in &distinct {
            let mut rows = Vec::with_capacity(builder.vocab_size);
            for m in 0..builder.vocab_size {
                rows.push(builder.action_probs_with(s, m, builder.selection, &mut scratch)?.to_vec());
            }
            probs.push(rows);
        }
        let total = states.len() as f64;
        Ok(Self { state_weights: counts.into_iter().map(|c| c / total).collect(), probs })
    }

    fn vocab(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    fn actions(&self) -> usize {
        self.probs.first().and_then(|r| r.first()).map_or(0, Vec::len)
    }

    pub fn report(&self) -> MetricReport {
        let (mi_messages, mi_states) = mutual_informations(self);
        MetricReport { mean_entropy: mean_entropy(self), mi_messages, mi_states }
    }
}

/// Average action entropy over all `(state, message)` pairs, in nats.
pub fn mean_entropy(t: &PolicyTable) -> f64 {
    let pm = 1.0 / t.vocab() as f64;
    t.probs
        .iter()
        .zip(&t.state_weights)
        .map(|(rows, ps)| ps * pm * rows.iter().map(|p| entropy(p)).sum::<f64>())
        .sum()
}

fn kl_term(joint: f64, product: f64) -> f64 {
    if joint > 0.0 {
        joint * (joint / product).ln()
    } else {
        0.0
    }
}

/// `(I(M; A), I(S; A))` in nats.
pub fn mutual_informations(t: &PolicyTable) -> (f64, f64) {
    let (nv, na) = (t.vocab(), t.actions());
    let pm = 1.0 / nv as f64;
    let mut p_ma = vec![0.0; nv * na];
    let mut p_sa = vec![0.0; t.probs.len() * na];
    let mut p_a = vec![0.0; na];
    for (s, (rows, ps)) in t.probs.iter().zip(&t.state_weights).enumerate() {
        for (m, row) in rows.iter().enumerate() {
            for (a, &p) in row.iter().enumerate() {
                let j = ps * pm * p;
                p_ma[m * na + a] += j;
                p_sa[s * na + a] += j;
                p_a[a] += j;
            }
        }
    }
    let mut i_m = 0.0;
    for m in 0..nv {
        for a in 0..na {
            i_m += kl_term(p_ma[m * na + a], p_a[a] * pm);
        }
    }
    let mut i_s = 0.0;
    for (s, ps) in t.state_weights.iter().enumerate() {
        for a in 0..na {
            i_s += kl_term(p_sa[s * na + a], p_a[a] * ps);
        }
    }
    (i_m, i_s)
}
