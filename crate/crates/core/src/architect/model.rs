use crate::builder::{builder_layer_dims, ActionSelection, BuilderAgent, BufferRole, InteractionBuffer, Scratch};
use crate::error::{Error, Result};
use crate::math::{bc_train, sample_index, PolicyNet, TrainConfig, TrainHistory};
use crate::world::{transition, Action, GridConfig, GridState, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Provenance {
    /// Fit by behavioral cloning on modelling-frame data.
    Learned,
    /// The builder's own policy, handed over for evaluation baselines.
    ExactReference,
}

/// The architect's model of how the builder answers a message.
#[derive(Clone, Debug, PartialEq)]
pub struct BuilderModel {
    pub agent: BuilderAgent,
    pub provenance: Provenance,
}

impl BuilderModel {
    /// Wraps the true builder, acting under `selection`.
    pub fn exact(builder: &BuilderAgent, selection: ActionSelection) -> Self {
        Self { agent: BuilderAgent { selection, ..builder.clone() }, provenance: Provenance::ExactReference }
    }

    pub fn learned(net: PolicyNet, grid: &GridConfig, vocab_size: usize) -> Result<Self> {
        let agent = BuilderAgent::with_net(net, grid, vocab_size, ActionSelection::Sample { temperature: 1.0 })?;
        Ok(Self { agent, provenance: Provenance::Learned })
    }

    pub fn vocab_size(&self) -> usize {
        self.agent.vocab_size
    }

    pub fn grid(&self) -> &GridConfig {
        &self.agent.grid
    }

    pub fn ignores_messages(&self) -> bool {
        self.agent.ignores_messages()
    }

    /// Predicted `P(a | s, m)`.
    pub fn probs(&self, s: &GridState, m: usize, scratch: &mut Scratch) -> Result<[f64; Action::COUNT]> {
        self.agent.action_probs_with(s, m, self.agent.selection, scratch)
    }
}

/// Fits the builder model on modelling-frame transitions.
pub fn model_builder(
    buffer: &InteractionBuffer,
    vocab_size: usize,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<(BuilderModel, TrainHistory)> {
    if buffer.role != BufferRole::Architect {
        return Err(Error::config("the builder model is fit on the architect's buffer"));
    }
    if buffer.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let grid = buffer.grid().clone();
    let template = PolicyNet::zeros(&builder_layer_dims(&grid, vocab_size, hidden))?;
    let (net, history) = bc_train(&template, &buffer.to_dataset(vocab_size), cfg)?;
    Ok((BuilderModel::learned(net, &grid, vocab_size)?, history))
}

/// Outcome of one simulated `(s, m)` edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub action: Action,
    pub next: GridState,
    pub reward: f64,
    pub done: bool,
}

/// Samples `a ~ model(.|s, m)` and applies the known dynamics and reward.
pub fn simulate_edge(
    model: &BuilderModel,
    s: &GridState,
    m: usize,
    task: &Task,
    scratch: &mut Scratch,
    rng: &mut impl rand::Rng,
) -> Result<Edge> {
    let probs = model.probs(s, m, scratch)?;
    Ok(edge_from_probs(&probs, model.grid(), s, task, rng))
}

pub(crate) fn edge_from_probs(
    probs: &[f64; Action::COUNT],
    grid: &GridConfig,
    s: &GridState,
    task: &Task,
    rng: &mut impl rand::Rng,
) -> Edge {
    let action = Action::ALL[sample_index(probs, rng)];
    let (next, reward, done) = transition(grid, s, action, task);
    Edge { action, next, reward, done }
}
