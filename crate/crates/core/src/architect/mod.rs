//! The architect: observes states and rewards, never acts, and steers the
//! builder with one message per time-step. It fits a model of the builder
//! from random-message interactions and plans over that model with UCT.

mod mcts;
mod model;

use serde::{Deserialize, Serialize};

pub use mcts::{backup_returns, mcts_decide, ucb_score, EdgeStats, FinalChoice, MctsConfig, Node, NodeId, RootStat, SearchTree};
pub use model::{model_builder, simulate_edge, BuilderModel, Edge, Provenance};

use crate::error::Result;
use crate::world::{GridState, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArchitectMode {
    /// Plan with the builder model.
    Guiding,
    /// Uniform messages, as in modelling frames.
    Random,
}

#[derive(Clone, Debug)]
pub struct Architect {
    pub model: BuilderModel,
    pub mcts: MctsConfig,
    tree: SearchTree,
    /// Root statistics of every guided decision, when recording is on.
    pub trace: Option<Vec<Vec<RootStat>>>,
}

impl Architect {
    pub fn new(model: BuilderModel, mcts: MctsConfig) -> Self {
        Self { model, mcts, tree: SearchTree::new(), trace: None }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn vocab_size(&self) -> usize {
        self.model.vocab_size()
    }

    /// Forgets the search tree; call at every episode start.
    pub fn reset_episode(&mut self) {
        self.tree.clear();
    }

    pub fn tree(&self) -> &SearchTree {
        &self.tree
    }

    /// Message for state `s`.
    ///
    /// When the modelled builder ignores messages every choice is equivalent
    /// and guiding falls back to a uniform draw.
    pub fn act(&mut self, s: &GridState, task: &Task, mode: ArchitectMode, rng: &mut impl rand::Rng) -> Result<usize> {
        if mode == ArchitectMode::Random || self.model.ignores_messages() {
            return Ok(rng.random_range(0..self.vocab_size()));
        }
        let m = mcts_decide(&mut self.tree, s, &self.model, task, &self.mcts, rng)?;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(self.tree.root_stats());
        }
        Ok(m)
    }

    /// Re-roots the search tree on the realized outcome of `message`.
    pub fn observe(&mut self, message: usize, next: &GridState) {
        if self.mcts.reuse_tree {
            self.tree.advance(message, next);
        } else {
            self.tree.clear();
        }
    }
}
