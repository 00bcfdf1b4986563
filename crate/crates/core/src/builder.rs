//! The builder: acts on `(state, message)` and learns only by imitating its
//! own guided behavior. Nothing in this module sees a reward or a task.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{argmax, bc_train, sample_index, softmax, Dataset, PolicyNet, TrainConfig, TrainHistory, Workspace};
use crate::world::{encode_observation_into, step, Action, GridConfig, GridState};

/// How actions are drawn from the policy logits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionSelection {
    Sample { temperature: f64 },
    Greedy,
}

impl ActionSelection {
    /// Action distribution implied by `logits`.
    pub fn probs(self, logits: &[f64]) -> [f64; Action::COUNT] {
        let mut out = [0.0; Action::COUNT];
        match self {
            ActionSelection::Sample { temperature } => out.copy_from_slice(&softmax(logits, temperature)),
            ActionSelection::Greedy => out[argmax(logits)] = 1.0,
        }
        out
    }
}

/// A hand-written `(state, message) -> action distribution` rule, used by
/// test harnesses (controllable or perfect builders).
#[derive(Clone)]
pub struct Scripted(pub Arc<dyn Fn(&GridState, usize) -> [f64; Action::COUNT] + Send + Sync>);

impl Scripted {
    pub fn new(f: impl Fn(&GridState, usize) -> [f64; Action::COUNT] + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for Scripted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Scripted(..)")
    }
}

impl PartialEq for Scripted {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BuilderPolicy {
    Network(PolicyNet),
    /// Ignores state and message; every action equally likely.
    Uniform,
    Scripted(Scripted),
}

/// Reusable buffers for allocation-free policy queries.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    ws: Workspace,
    features: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuilderAgent {
    pub policy: BuilderPolicy,
    pub selection: ActionSelection,
    pub vocab_size: usize,
    pub grid: GridConfig,
}

/// `encode_observation(s) ++ one_hot(m)`.
pub fn builder_features(s: &GridState, m: usize, grid: &GridConfig, vocab_size: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(grid.observation_width() + vocab_size);
    builder_features_into(s, m, grid, vocab_size, &mut x);
    x
}

pub fn builder_features_into(s: &GridState, m: usize, grid: &GridConfig, vocab_size: usize, x: &mut Vec<f64>) {
    x.clear();
    encode_observation_into(s, grid, x);
    let base = x.len();
    x.resize(base + vocab_size, 0.0);
    x[base + m] = 1.0;
}

/// Layer widths of a builder-shaped network.
pub fn builder_layer_dims(grid: &GridConfig, vocab_size: usize, hidden: &[usize]) -> Vec<usize> {
    let mut dims = vec![grid.observation_width() + vocab_size];
    dims.extend_from_slice(hidden);
    dims.push(Action::COUNT);
    dims
}

impl BuilderAgent {
    /// A builder with a freshly initialized network.
    pub fn fresh(grid: &GridConfig, vocab_size: usize, hidden: &[usize], selection: ActionSelection, seed: u64) -> Result<Self> {
        let net = PolicyNet::new(&builder_layer_dims(grid, vocab_size, hidden), seed)?;
        Self::with_net(net, grid, vocab_size, selection)
    }

    pub fn with_net(net: PolicyNet, grid: &GridConfig, vocab_size: usize, selection: ActionSelection) -> Result<Self> {
        let expected = grid.observation_width() + vocab_size;
        if net.input_width() != expected {
            return Err(Error::Dimension { expected, got: net.input_width() });
        }
        if net.output_width() != Action::COUNT {
            return Err(Error::Dimension { expected: Action::COUNT, got: net.output_width() });
        }
        Ok(Self { policy: BuilderPolicy::Network(net), selection, vocab_size, grid: grid.clone() })
    }

    pub fn uniform(grid: &GridConfig, vocab_size: usize) -> Self {
        Self { policy: BuilderPolicy::Uniform, selection: ActionSelection::Greedy, vocab_size, grid: grid.clone() }
    }

    pub fn scripted(policy: Scripted, grid: &GridConfig, vocab_size: usize) -> Self {
        Self { policy: BuilderPolicy::Scripted(policy), selection: ActionSelection::Greedy, vocab_size, grid: grid.clone() }
    }

    pub fn net(&self) -> Option<&PolicyNet> {
        match &self.policy {
            BuilderPolicy::Network(n) => Some(n),
            _ => None,
        }
    }

    /// True when actions do not depend on the message at all.
    pub fn ignores_messages(&self) -> bool {
        matches!(self.policy, BuilderPolicy::Uniform)
    }

    pub fn fingerprint(&self) -> u64 {
        self.net().map_or(0, PolicyNet::fingerprint)
    }

    fn check_message(&self, m: usize) -> Result<()> {
        if m >= self.vocab_size {
            return Err(Error::InvalidMessage { index: m, vocab: self.vocab_size });
        }
        Ok(())
    }

    /// `pi_B(. | s, m)` under the given selection rule.
    /// `pi_B(. | s, m)` under the given selection rule. Scripted policies
    /// return their table as is.
    pub fn action_probs_with(
        &self,
        s: &GridState,
        m: usize,
        selection: ActionSelection,
        scratch: &mut Scratch,
    ) -> Result<[f64; Action::COUNT]> {
        self.check_message(m)?;
        match &self.policy {
            BuilderPolicy::Uniform => Ok([1.0 / Action::COUNT as f64; Action::COUNT]),
            BuilderPolicy::Scripted(f) => Ok((f.0)(s, m)),
            BuilderPolicy::Network(net) => {
                builder_features_into(s, m, &self.grid, self.vocab_size, &mut scratch.features);
                Ok(selection.probs(net.forward_with(&scratch.features, &mut scratch.ws)?))
            }
        }
    }

    pub fn action_probs(&self, s: &GridState, m: usize) -> Result<[f64; Action::COUNT]> {
        self.action_probs_with(s, m, self.selection, &mut Scratch::default())
    }

    /// Draws an action for `(s, m)` with the agent's own selection rule.
    pub fn act(&self, s: &GridState, m: usize, rng: &mut impl rand::Rng) -> Result<Action> {
        self.act_with(s, m, self.selection, rng)
    }

    pub fn act_with(&self, s: &GridState, m: usize, selection: ActionSelection, rng: &mut impl rand::Rng) -> Result<Action> {
        if let (BuilderPolicy::Network(net), ActionSelection::Sample { temperature }) = (&self.policy, selection) {
            self.check_message(m)?;
            let logits = net.forward(&builder_features(s, m, &self.grid, self.vocab_size))?;
            let i = crate::math::softmax_sample(&logits, temperature, rng)?;
            return Ok(Action::ALL[i]);
        }
        let probs = self.action_probs_with(s, m, selection, &mut Scratch::default())?;
        Ok(Action::ALL[sample_index(&probs, rng)])
    }

    /// Re-trains a freshly initialized network on the guided transitions in
    /// `buffer`. The current network is discarded, which is what lets
    /// unused messages fall back to uninformed preferences.
    pub fn self_imitate(&self, buffer: &InteractionBuffer, cfg: &TrainConfig) -> Result<(BuilderAgent, TrainHistory)> {
        if buffer.role != BufferRole::Builder {
            return Err(Error::config("self-imitation needs the builder's buffer"));
        }
        if buffer.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let template = match &self.policy {
            BuilderPolicy::Network(net) => net.clone(),
            _ => return Err(Error::config("only network builders learn")),
        };
        let data = buffer.to_dataset(self.vocab_size);
        let (net, history) = bc_train(&template, &data, cfg)?;
        Ok((BuilderAgent { policy: BuilderPolicy::Network(net), ..self.clone() }, history))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BufferRole {
    /// Collected by the architect during modelling frames.
    Architect,
    /// Collected by the builder during guiding frames.
    Builder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: GridState,
    pub message: usize,
    pub action: Action,
    pub next: GridState,
}

/// Ordered `(s, m, a, s')` records.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionBuffer {
    pub role: BufferRole,
    grid: GridConfig,
    transitions: Vec<Transition>,
}

impl InteractionBuffer {
    pub fn new(role: BufferRole, grid: &GridConfig) -> Self {
        Self { role, grid: grid.clone(), transitions: Vec::new() }
    }

    /// Appends a transition after checking it against the dynamics.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        if step(&self.grid, &t.state, t.action) != t.next {
            return Err(Error::InconsistentTransition);
        }
        self.transitions.push(t);
        Ok(())
    }

    pub fn extend(&mut self, other: InteractionBuffer) {
        self.transitions.extend(other.transitions);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn flush(&mut self) {
        self.transitions.clear();
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn to_dataset(&self, vocab_size: usize) -> Dataset {
        let mut data = Dataset::default();
        for t in &self.transitions {
            data.push(builder_features(&t.state, t.message, &self.grid, vocab_size), t.action.index());
        }
        data
    }
}
