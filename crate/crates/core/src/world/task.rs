use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::grid::{step, Action, Block, Cell, GridConfig, GridState};
use super::shapes::ShapeLibrary;
use crate::error::{Error, Result};

/// What a task asks for, before per-episode instantiation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    Grasp,
    /// `None` draws a fresh target cell every episode.
    Place(Option<Cell>),
    HLine,
    VLine,
    Shape { name: String, cells: Vec<Cell> },
}

/// A configured task: kind plus matching options.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub contiguous_lines: bool,
    pub translation_invariant: bool,
}

/// The per-episode goal handed to the architect.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Goal {
    Grasp,
    Place(Cell),
    HLine,
    VLine,
    Shape(Vec<Cell>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Task {
    pub goal: Goal,
    pub contiguous_lines: bool,
    pub translation_invariant: bool,
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> Self {
        Self { kind, contiguous_lines: true, translation_invariant: false }
    }

    pub fn grasp() -> Self {
        Self::new(TaskKind::Grasp)
    }

    pub fn place() -> Self {
        Self::new(TaskKind::Place(None))
    }

    /// The four training tasks.
    pub fn training_set() -> Vec<TaskSpec> {
        vec![Self::grasp(), Self::place(), Self::new(TaskKind::HLine), Self::new(TaskKind::VLine)]
    }

    /// Parses `grasp`, `place`, `place@X,Y`, `h-line`, `v-line` or `shape:NAME`.
    pub fn parse(text: &str, shapes: &ShapeLibrary) -> Result<Self> {
        let t = text.trim();
        let kind = match t {
            "grasp" => TaskKind::Grasp,
            "place" => TaskKind::Place(None),
            "h-line" | "hline" => TaskKind::HLine,
            "v-line" | "vline" => TaskKind::VLine,
            _ if t.starts_with("place@") => {
                let (x, y) = t["place@".len()..]
                    .split_once(',')
                    .ok_or_else(|| Error::parse("task", format!("expected place@X,Y, got {t}")))?;
                let x = x.trim().parse().map_err(|e| Error::parse("task", e))?;
                let y = y.trim().parse().map_err(|e| Error::parse("task", e))?;
                TaskKind::Place(Some(Cell::new(x, y)))
            }
            _ if t.starts_with("shape:") => {
                let name = &t["shape:".len()..];
                let cells = shapes
                    .get(name)
                    .ok_or_else(|| Error::parse("task", format!("unknown shape {name}")))?
                    .to_vec();
                TaskKind::Shape { name: name.to_string(), cells }
            }
            _ => return Err(Error::parse("task", format!("unknown task {t}"))),
        };
        Ok(Self::new(kind))
    }

    pub fn name(&self) -> String {
        match &self.kind {
            TaskKind::Grasp => "grasp".into(),
            TaskKind::Place(None) => "place".into(),
            TaskKind::Place(Some(c)) => format!("place@{},{}", c.x, c.y),
            TaskKind::HLine => "h-line".into(),
            TaskKind::VLine => "v-line".into(),
            TaskKind::Shape { name, .. } => format!("shape:{name}"),
        }
    }

    pub fn validate(&self, cfg: &GridConfig) -> Result<()> {
        match &self.kind {
            TaskKind::Place(Some(c)) if !cfg.contains(*c) => {
                Err(Error::config(format!("place target {c} outside the grid")))
            }
            TaskKind::HLine | TaskKind::VLine if cfg.n_blocks < 2 => {
                Err(Error::config("line tasks need at least two blocks"))
            }
            TaskKind::HLine if self.contiguous_lines && cfg.n_blocks > cfg.width as usize => {
                Err(Error::config("horizontal line longer than the grid width"))
            }
            TaskKind::VLine if self.contiguous_lines && cfg.n_blocks > cfg.height as usize => {
                Err(Error::config("vertical line longer than the grid height"))
            }
            TaskKind::Shape { cells, .. } => {
                let distinct: BTreeSet<_> = cells.iter().collect();
                if distinct.len() != cfg.n_blocks || cells.len() != cfg.n_blocks {
                    return Err(Error::config(format!(
                        "shape has {} distinct cells but the grid has {} blocks",
                        distinct.len(),
                        cfg.n_blocks
                    )));
                }
                if cells.iter().any(|c| !cfg.contains(*c)) {
                    return Err(Error::config("shape cell outside the grid"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Task {
    pub fn new(goal: Goal) -> Self {
        Self { goal, contiguous_lines: true, translation_invariant: false }
    }
}

fn loose_cells(s: &GridState) -> Option<Vec<Cell>> {
    if s.blocks.iter().any(|b| b.grasped) {
        None
    } else {
        Some(s.blocks.iter().map(|b| b.cell).collect())
    }
}

fn is_run(mut v: Vec<u8>) -> bool {
    v.sort_unstable();
    v.windows(2).all(|w| w[1] == w[0] + 1)
}

fn normalized(cells: &[Cell]) -> BTreeSet<(u8, u8)> {
    let mx = cells.iter().map(|c| c.x).min().unwrap_or(0);
    let my = cells.iter().map(|c| c.y).min().unwrap_or(0);
    cells.iter().map(|c| (c.x - mx, c.y - my)).collect()
}

/// Goal predicate on a state.
pub fn is_success(s: &GridState, task: &Task) -> bool {
    match &task.goal {
        Goal::Grasp => s.held().is_some(),
        Goal::Place(target) => s.blocks.iter().any(|b| !b.grasped && b.cell == *target),
        Goal::HLine | Goal::VLine => {
            let Some(cells) = loose_cells(s) else { return false };
            let horizontal = task.goal == Goal::HLine;
            let (line, along): (Vec<u8>, Vec<u8>) =
                cells.iter().map(|c| if horizontal { (c.y, c.x) } else { (c.x, c.y) }).unzip();
            line.iter().all(|&v| v == line[0]) && (!task.contiguous_lines || is_run(along))
        }
        Goal::Shape(target) => {
            let Some(cells) = loose_cells(s) else { return false };
            if task.translation_invariant {
                normalized(&cells) == normalized(target)
            } else {
                cells.iter().collect::<BTreeSet<_>>() == target.iter().collect::<BTreeSet<_>>()
            }
        }
    }
}

/// Sparse reward: 1 when the post-transition state satisfies the goal.
pub fn reward(_s: &GridState, _a: Action, s_next: &GridState, task: &Task) -> f64 {
    if is_success(s_next, task) {
        1.0
    } else {
        0.0
    }
}

/// One environment transition with its reward and termination flag.
pub fn transition(cfg: &GridConfig, s: &GridState, a: Action, task: &Task) -> (GridState, f64, bool) {
    let next = step(cfg, s, a);
    let r = reward(s, a, &next, task);
    (next, r, r > 0.0)
}

const MAX_RESET_TRIES: usize = 10_000;

/// Spawns the agent and blocks on distinct uniform cells with an open
/// gripper, and instantiates the goal (drawing a Place target if needed).
///
/// Start states that already satisfy the goal are redrawn.
pub fn reset(cfg: &GridConfig, spec: &TaskSpec, rng: &mut impl rand::Rng) -> (GridState, Task) {
    let mut cells: Vec<Cell> = cfg.all_cells().collect();
    let mut last = None;
    for _ in 0..MAX_RESET_TRIES {
        cells.shuffle(rng);
        let s = GridState {
            agent: cells[0],
            gripper_closed: false,
            blocks: cells[1..=cfg.n_blocks].iter().map(|&c| Block { cell: c, grasped: false }).collect(),
        };
        let goal = match &spec.kind {
            TaskKind::Grasp => Goal::Grasp,
            TaskKind::Place(Some(c)) => Goal::Place(*c),
            TaskKind::Place(None) => {
                let free: Vec<Cell> = cfg.all_cells().filter(|c| s.blocks.iter().all(|b| b.cell != *c)).collect();
                let pool = if free.is_empty() { &cells } else { &free };
                Goal::Place(pool[rng.random_range(0..pool.len())])
            }
            TaskKind::HLine => Goal::HLine,
            TaskKind::VLine => Goal::VLine,
            TaskKind::Shape { cells, .. } => Goal::Shape(cells.clone()),
        };
        let task = Task { goal, contiguous_lines: spec.contiguous_lines, translation_invariant: spec.translation_invariant };
        if !is_success(&s, &task) {
            return (s, task);
        }
        last = Some((s, task));
    }
    last.expect("at least one reset attempt")
}
