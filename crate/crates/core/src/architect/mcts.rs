//! UCT search over messages.
//!
//! Nodes are labelled by environment states. Choosing message `m` at a node
//! samples a builder action from the model, and the known dynamics give the
//! child's label, so one `(node, message)` edge may fan out into several
//! children. Leaves are scored with the task heuristic instead of rollouts.

use serde::{Deserialize, Serialize};

use super::model::{edge_from_probs, BuilderModel};
use crate::builder::Scratch;
use crate::error::{Error, Result};
use crate::world::{heuristic_value, Action, GridState, Task};

/// How the message is picked at the root once the budget is spent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalChoice {
    /// The selection rule itself (mean return plus exploration bonus).
    Ucb,
    /// Highest mean return.
    MaxQ,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MctsConfig {
    /// Simulations per decision; each creates at most one node.
    pub budget: usize,
    pub exploration: f64,
    pub gamma: f64,
    pub reuse_tree: bool,
    pub max_tree_depth: usize,
    pub final_choice: FinalChoice,
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self {
            budget: 100,
            exploration: std::f64::consts::SQRT_2,
            gamma: 0.95,
            reuse_tree: true,
            max_tree_depth: 500,
            final_choice: FinalChoice::MaxQ,
        }
    }
}

impl MctsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::config("MCTS budget must be at least 1"));
        }
        if self.max_tree_depth == 0 {
            return Err(Error::config("max_tree_depth must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must lie in [0, 1)"));
        }
        if !(self.exploration >= 0.0) {
            return Err(Error::config("exploration constant must be non-negative"));
        }
        Ok(())
    }
}

/// Upper confidence bound `Q + c * sqrt(ln(total) / visits)`.
pub fn ucb_score(q: f64, visits: u64, total_visits: u64, c: f64) -> f64 {
    q + c * ((total_visits as f64).ln() / visits as f64).sqrt()
}

/// Discounted returns `G^k` for every depth `k` of a path ending in a leaf
/// valued `leaf_value`; `rewards[k]` is collected on the edge from depth `k`
/// to `k + 1`.
pub fn backup_returns(rewards: &[f64], leaf_value: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut g = leaf_value;
    for k in (0..rewards.len()).rev() {
        g = rewards[k] + gamma * g;
        out[k] = g;
    }
    out
}

pub type NodeId = usize;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeStats {
    pub visits: u64,
    pub return_sum: f64,
    /// `(child label, child node, reward on the edge)`.
    children: Vec<(GridState, NodeId, f64)>,
}

impl EdgeStats {
    pub fn q(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.return_sum / self.visits as f64
        }
    }

    pub fn child_count(&self) -> usize {
        self.children.len()
    }

    pub fn children(&self) -> &[(GridState, NodeId, f64)] {
        &self.children
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub state: GridState,
    pub depth: usize,
    pub terminal: bool,
    pub value: f64,
    pub edges: Vec<EdgeStats>,
    probs: Vec<Option<[f64; Action::COUNT]>>,
}

impl Node {
    pub fn total_visits(&self) -> u64 {
        self.edges.iter().map(|e| e.visits).sum()
    }
}

/// Per-message statistics at the root after a search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootStat {
    pub message: usize,
    pub visits: u64,
    pub q: f64,
}

/// Node arena plus the current root. Nodes outside the current root's
/// subtree stay allocated until [`SearchTree::clear`].
#[derive(Clone, Debug, Default)]
pub struct SearchTree {
    nodes: Vec<Node>,
    root: Option<NodeId>,
    simulations: u64,
    scratch: Scratch,
}

impl SearchTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.root = None;
        self.simulations = 0;
    }

    pub fn root(&self) -> Option<&Node> {
        self.root.map(|r| &self.nodes[r])
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Simulations run through the current root since it became the root.
    pub fn simulations(&self) -> u64 {
        self.simulations
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root_stats(&self) -> Vec<RootStat> {
        self.root()
            .map(|n| {
                n.edges
                    .iter()
                    .enumerate()
                    .map(|(m, e)| RootStat { message: m, visits: e.visits, q: e.q() })
                    .collect()
            })
            .unwrap_or_default()
    }

    fn add_node(&mut self, state: GridState, depth: usize, terminal: bool, value: f64, vocab: usize) -> NodeId {
        self.nodes.push(Node {
            state,
            depth,
            terminal,
            value,
            edges: vec![EdgeStats::default(); vocab],
            probs: vec![None; vocab],
        });
        self.nodes.len() - 1
    }

    /// Moves the root to the child reached by `(message, next)`, or empties
    /// the tree when that outcome was never simulated.
    pub fn advance(&mut self, message: usize, next: &GridState) {
        let child = self.root.and_then(|r| {
            self.nodes[r]
                .edges
                .get(message)
                .and_then(|e| e.children.iter().find(|(s, _, _)| s == next).map(|&(_, id, _)| id))
        });
        match child {
            Some(id) if !self.nodes[id].terminal => {
                self.root = Some(id);
                self.simulations = self.nodes[id].total_visits();
            }
            _ => self.clear(),
        }
    }

    fn ensure_root(&mut self, state: &GridState, task: &Task, model: &BuilderModel, cfg: &MctsConfig) {
        let reusable = cfg.reuse_tree && self.root().is_some_and(|n| &n.state == state);
        if !reusable {
            self.clear();
            let value = heuristic_value(state, task, model.grid(), cfg.gamma);
            let id = self.add_node(state.clone(), 0, false, value, model.vocab_size());
            self.root = Some(id);
        }
    }

    fn select(&self, id: NodeId, c: f64, rng: &mut impl rand::Rng) -> usize {
        let node = &self.nodes[id];
        let untried: Vec<usize> = (0..node.edges.len()).filter(|&m| node.edges[m].visits == 0).collect();
        if !untried.is_empty() {
            return untried[rng.random_range(0..untried.len())];
        }
        let total = node.total_visits();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (m, e) in node.edges.iter().enumerate() {
            let score = ucb_score(e.q(), e.visits, total, c);
            if score > best_score {
                best_score = score;
                best = m;
            }
        }
        best
    }

    fn probs(&mut self, id: NodeId, m: usize, model: &BuilderModel) -> Result<[f64; Action::COUNT]> {
        if let Some(p) = self.nodes[id].probs[m] {
            return Ok(p);
        }
        let p = model.probs(&self.nodes[id].state, m, &mut self.scratch)?;
        self.nodes[id].probs[m] = Some(p);
        Ok(p)
    }

    /// One selection / expansion / backup pass from the root.
    pub fn simulate(&mut self, model: &BuilderModel, task: &Task, cfg: &MctsConfig, rng: &mut impl rand::Rng) -> Result<()> {
        let root = self.root.ok_or_else(|| Error::config("search tree has no root"))?;
        let root_depth = self.nodes[root].depth;
        let vocab = model.vocab_size();
        let mut path: Vec<(NodeId, usize, f64)> = Vec::new();
        let mut node = root;
        let leaf_value = loop {
            if self.nodes[node].depth - root_depth >= cfg.max_tree_depth {
                break self.nodes[node].value;
            }
            let m = self.select(node, cfg.exploration, rng);
            let probs = self.probs(node, m, model)?;
            let edge = edge_from_probs(&probs, model.grid(), &self.nodes[node].state, task, rng);
            path.push((node, m, edge.reward));
            let known = self.nodes[node].edges[m].children.iter().find(|(s, _, _)| *s == edge.next).map(|&(_, id, _)| id);
            match known {
                Some(child) if self.nodes[child].terminal => break 0.0,
                Some(child) => node = child,
                None => {
                    let value = if edge.done { 0.0 } else { heuristic_value(&edge.next, task, model.grid(), cfg.gamma) };
                    let depth = self.nodes[node].depth + 1;
                    let child = self.add_node(edge.next.clone(), depth, edge.done, value, vocab);
                    self.nodes[node].edges[m].children.push((edge.next, child, edge.reward));
                    break value;
                }
            }
        };
        let rewards: Vec<f64> = path.iter().map(|p| p.2).collect();
        for ((id, m, _), g) in path.iter().zip(backup_returns(&rewards, leaf_value, cfg.gamma)) {
            let e = &mut self.nodes[*id].edges[*m];
            e.visits += 1;
            e.return_sum += g;
        }
        self.simulations += 1;
        Ok(())
    }

    fn final_message(&self, cfg: &MctsConfig) -> usize {
        let root = self.root().expect("search ran");
        let total = root.total_visits();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (m, e) in root.edges.iter().enumerate() {
            if e.visits == 0 {
                continue;
            }
            let score = match cfg.final_choice {
                FinalChoice::Ucb => ucb_score(e.q(), e.visits, total, cfg.exploration),
                FinalChoice::MaxQ => e.q(),
            };
            if score > best_score {
                best_score = score;
                best = m;
            }
        }
        best
    }
}

/// Runs `cfg.budget` simulations from `root_state` and returns the message
/// to send. A reusable tree rooted at `root_state` keeps its statistics.
pub fn mcts_decide(
    tree: &mut SearchTree,
    root_state: &GridState,
    model: &BuilderModel,
    task: &Task,
    cfg: &MctsConfig,
    rng: &mut impl rand::Rng,
) -> Result<usize> {
    cfg.validate()?;
    tree.ensure_root(root_state, task, model, cfg);
    for _ in 0..cfg.budget {
        tree.simulate(model, task, cfg, rng)?;
    }
    Ok(tree.final_message(cfg))
}
