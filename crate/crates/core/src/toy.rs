//! The one-state, two-message, two-action guiding problem.
//!
//! Action `a2` wins (+1), `a1` loses (-1). The builder is a per-message
//! logits table; every iteration it is reset to zero logits and re-fit on
//! the 100 `(message, action)` pairs it produced, so a message that does
//! not appear in the data returns to exactly uniform preferences.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{adam_step, sample_index, softmax, AdamState};
use crate::seed;

pub const MESSAGES: usize = 2;
pub const ACTIONS: usize = 2;
/// Index of the winning action `a2`.
pub const WIN: usize = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub temperature: f64,
    pub samples: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub max_iterations: usize,
    /// Largest per-entry probability change that counts as converged.
    pub tolerance: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            temperature: 0.5,
            samples: 100,
            learning_rate: 0.1,
            epochs: 1000,
            batch_size: 50,
            max_iterations: 50,
            tolerance: 1e-6,
        }
    }
}

pub fn toy_reward(action: usize) -> f64 {
    if action == WIN {
        1.0
    } else {
        -1.0
    }
}

/// Message-conditioned action logits, `logits[m][a]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub logits: [[f64; ACTIONS]; MESSAGES],
}

impl ToyPolicy {
    pub fn uniform() -> Self {
        Self { logits: [[0.0; ACTIONS]; MESSAGES] }
    }

    /// Installs `probs[m][a]` as log-probabilities.
    pub fn from_probs(probs: [[f64; ACTIONS]; MESSAGES]) -> Result<Self> {
        for row in &probs {
            if row.iter().any(|&p| !(p > 0.0 && p < 1.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!("invalid toy probability row {row:?}")));
            }
        }
        Ok(Self { logits: probs.map(|row| row.map(f64::ln)) })
    }

    pub fn probs(&self, m: usize) -> [f64; ACTIONS] {
        let p = softmax(&self.logits[m], 1.0);
        [p[0], p[1]]
    }

    pub fn prob_table(&self) -> [[f64; ACTIONS]; MESSAGES] {
        [self.probs(0), self.probs(1)]
    }

    fn max_change(&self, other: &ToyPolicy) -> f64 {
        let (a, b) = (self.prob_table(), other.prob_table());
        a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyCondition {
    Unfavorable,
    Favorable,
    Intermediate,
}

impl ToyCondition {
    pub const ALL: [ToyCondition; 3] = [ToyCondition::Unfavorable, ToyCondition::Favorable, ToyCondition::Intermediate];

    /// Initial `P(a|m)` tables, rows `m1`, `m2`, columns `a1`, `a2`.
    pub fn table(self) -> [[f64; ACTIONS]; MESSAGES] {
        match self {
            ToyCondition::Unfavorable => [[0.8, 0.2], [0.9, 0.1]],
            ToyCondition::Favorable => [[0.2, 0.8], [0.1, 0.9]],
            ToyCondition::Intermediate => [[0.9, 0.1], [0.1, 0.9]],
        }
    }

    pub fn policy(self) -> ToyPolicy {
        ToyPolicy::from_probs(self.table()).expect("built-in tables are valid")
    }
}

impl fmt::Display for ToyCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyCondition::Unfavorable => "unfavorable",
            ToyCondition::Favorable => "favorable",
            ToyCondition::Intermediate => "intermediate",
        })
    }
}

impl FromStr for ToyCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unfavorable" => Ok(Self::Unfavorable),
            "favorable" => Ok(Self::Favorable),
            "intermediate" => Ok(Self::Intermediate),
            _ => Err(Error::parse("toy condition", s)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyMethod {
    Abig,
    NoIntent,
}

impl fmt::Display for ToyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyMethod::Abig => "abig",
            ToyMethod::NoIntent => "no-intent",
        })
    }
}

impl FromStr for ToyMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abig" => Ok(Self::Abig),
            "no-intent" => Ok(Self::NoIntent),
            _ => Err(Error::parse("toy method", s)),
        }
    }
}

/// Uniform choice among the indices attaining the maximum.
fn argmax_fair(values: &[f64], rng: &mut impl rand::Rng) -> usize {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    ties[rng.random_range(0..ties.len())]
}

/// Re-fits a zero-initialized table to `(message, action)` pairs by Adam on
/// the mean cross-entropy.
pub fn toy_retrain(pairs: &[(usize, usize)], cfg: &ToyConfig, rng: &mut impl rand::Rng) -> ToyPolicy {
    let mut logits = [0.0; MESSAGES * ACTIONS];
    let mut state = AdamState::new(logits.len());
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut grad = [0.0; MESSAGES * ACTIONS];
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let (m, a) = pairs[i];
                let p = softmax(&logits[m * ACTIONS..(m + 1) * ACTIONS], 1.0);
                for (k, pk) in p.iter().enumerate() {
                    grad[m * ACTIONS + k] += (pk - f64::from(u8::from(k == a))) / batch.len() as f64;
                }
            }
            adam_step(&mut logits, &grad, &mut state, cfg.learning_rate).expect("fixed shapes");
        }
    }
    ToyPolicy { logits: [[logits[0], logits[1]], [logits[2], logits[3]]] }
}

/// Messages the architect sends and the actions the builder samples for one iteration.
pub fn toy_collect(policy: &ToyPolicy, guided: bool, cfg: &ToyConfig, rng: &mut impl rand::Rng) -> Vec<(usize, usize)> {
    let win_probs = [policy.probs(0)[WIN], policy.probs(1)[WIN]];
    (0..cfg.samples)
        .map(|_| {
            let m = if guided { argmax_fair(&win_probs, rng) } else { rng.random_range(0..MESSAGES) };
            let a = sample_index(&softmax(&policy.logits[m], cfg.temperature), rng);
            (m, a)
        })
        .collect()
}

/// One collect-then-self-imitate iteration.
pub fn toy_abig_iteration(policy: &ToyPolicy, guided: bool, cfg: &ToyConfig, rng: &mut impl rand::Rng) -> ToyPolicy {
    let pairs = toy_collect(policy, guided, cfg, rng);
    toy_retrain(&pairs, cfg, rng)
}

/// A knowledgeable architect picks the message most likely to yield `a2`;
/// the builder plays its preferred action for it.
pub fn toy_evaluate(policy: &ToyPolicy, rng: &mut impl rand::Rng) -> bool {
    let win_probs = [policy.probs(0)[WIN], policy.probs(1)[WIN]];
    let m = argmax_fair(&win_probs, rng);
    argmax_fair(&policy.probs(m), rng) == WIN
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyRun {
    pub seed: u64,
    pub condition: ToyCondition,
    pub method: ToyMethod,
    pub iterations: usize,
    pub converged: bool,
    pub win: bool,
    pub final_probs: [[f64; ACTIONS]; MESSAGES],
}

pub fn run_toy(condition: ToyCondition, method: ToyMethod, seed: u64, cfg: &ToyConfig) -> ToyRun {
    let mut rng = seed::rng(seed, &[0x70e, condition as u64, method as u64]);
    let mut policy = condition.policy();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        let next = toy_abig_iteration(&policy, method == ToyMethod::Abig, cfg, &mut rng);
        iterations += 1;
        let change = next.max_change(&policy);
        policy = next;
        if change < cfg.tolerance {
            converged = true;
            break;
        }
    }
    let win = toy_evaluate(&policy, &mut rng);
    ToyRun { seed, condition, method, iterations, converged, win, final_probs: policy.prob_table() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::entropy;

    #[test]
    fn rewards() {
        assert_eq!(toy_reward(1), 1.0);
        assert_eq!(toy_reward(0), -1.0);
    }

    #[test]
    fn unseen_message_is_forgotten() {
        let cfg = ToyConfig::default();
        let pairs: Vec<_> = (0..100).map(|i| (0, usize::from(i % 3 == 0))).collect();
        let p = toy_retrain(&pairs, &cfg, &mut seed::rng(1, &[]));
        assert_eq!(p.probs(1), [0.5, 0.5]);
    }

    #[test]
    fn constant_pairs_are_memorized() {
        let cfg = ToyConfig::default();
        let p = toy_retrain(&[(0, WIN); 100], &cfg, &mut seed::rng(2, &[]));
        assert!(p.probs(0)[WIN] >= 0.99);
    }

    fn retrain_entropy_excess(pairs: &[(usize, usize)], cfg: &ToyConfig, rng: &mut crate::seed::Rng) -> f64 {
        let p = toy_retrain(pairs, cfg, rng);
        let q = pairs.iter().filter(|&&(_, a)| a == WIN).count() as f64 / pairs.len() as f64;
        entropy(&p.probs(pairs[0].0)) - entropy(&[1.0 - q, q])
    }

    #[test]
    fn retrained_entropy_does_not_exceed_empirical() {
        let mut rng = seed::rng(3, &[]);
        // Degenerate data under the real schedule: entropy must collapse.
        let cfg = ToyConfig::default();
        for a in [0, WIN] {
            assert!(retrain_entropy_excess(&[(1, a); 100], &cfg, &mut rng) <= 1e-3);
        }
        // Mixed data: the full-batch objective converges onto the empirical entropy.
        let full = ToyConfig { batch_size: 100, ..ToyConfig::default() };
        for k in [1usize, 3, 17, 50, 81, 99] {
            let pairs: Vec<_> = (0..100).map(|i| (1, usize::from(i < k))).collect();
            let excess = retrain_entropy_excess(&pairs, &full, &mut rng);
            assert!(excess <= 1e-3, "k={k} excess {excess}");
        }
    }

    #[test]
    fn minibatch_noise_does_not_inflate_entropy_on_average() {
        let cfg = ToyConfig::default();
        let mut rng = seed::rng(8, &[]);
        let trials = 60;
        let mut total = 0.0;
        for t in 0..trials {
            let k = 5 + (t * 13) % 90;
            let pairs: Vec<_> = (0..100).map(|i| (0, usize::from(i < k))).collect();
            total += retrain_entropy_excess(&pairs, &cfg, &mut rng);
        }
        assert!(total / trials as f64 <= 1e-3, "mean excess {}", total / trials as f64);
    }

    #[test]
    fn evaluation_rules() {
        let mut rng = seed::rng(4, &[]);
        let good = ToyPolicy::from_probs([[0.1, 0.9], [0.6, 0.4]]).unwrap();
        assert!(toy_evaluate(&good, &mut rng));
        let bad = ToyPolicy::from_probs([[0.9, 0.1], [0.9, 0.1]]).unwrap();
        assert!(!toy_evaluate(&bad, &mut rng));
    }

    #[test]
    fn guided_round_resets_the_unused_message() {
        let cfg = ToyConfig::default();
        let next = toy_abig_iteration(&ToyCondition::Unfavorable.policy(), true, &cfg, &mut seed::rng(5, &[]));
        assert_eq!(next.probs(1), [0.5, 0.5]);
    }

    #[test]
    fn parse_names() {
        assert_eq!("favorable".parse::<ToyCondition>().unwrap(), ToyCondition::Favorable);
        assert_eq!("no-intent".parse::<ToyMethod>().unwrap(), ToyMethod::NoIntent);
        assert!("sometimes".parse::<ToyCondition>().is_err());
    }
}
