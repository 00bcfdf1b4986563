use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid cell; `x` is the column, `y` the row (row 0 at the top).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: u8,
    pub y: u8,
}

impl Cell {
    pub fn new(x: u8, y: u8) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        (self.x as i32 - other.x as i32).unsigned_abs() + (self.y as i32 - other.y as i32).unsigned_abs()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub width: u8,
    pub height: u8,
    pub n_blocks: usize,
    pub episode_len: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { width: 5, height: 6, n_blocks: 3, episode_len: 40 }
    }
}

impl GridConfig {
    pub fn new(width: u8, height: u8, n_blocks: usize, episode_len: usize) -> Self {
        Self { width, height, n_blocks, episode_len }
    }

    pub fn cells(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn observation_width(&self) -> usize {
        3 + 3 * self.n_blocks
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn all_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.n_blocks == 0 || self.episode_len == 0 {
            return Err(Error::config("grid width, height, n_blocks and episode_len must be positive"));
        }
        if self.n_blocks + 1 > self.cells() {
            return Err(Error::config(format!(
                "{} blocks plus the agent do not fit on a {}x{} grid",
                self.n_blocks, self.width, self.height
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub cell: Cell,
    pub grasped: bool,
}

/// Full environment state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    pub agent: Cell,
    pub gripper_closed: bool,
    pub blocks: Vec<Block>,
}

impl GridState {
    pub fn held(&self) -> Option<usize> {
        self.blocks.iter().position(|b| b.grasped)
    }

    fn loose_block_at(&self, c: Cell) -> Option<usize> {
        self.blocks.iter().position(|b| !b.grasped && b.cell == c)
    }

    /// Checks the structural invariants, returning the first violation.
    pub fn check(&self, cfg: &GridConfig) -> std::result::Result<(), String> {
        if self.blocks.len() != cfg.n_blocks {
            return Err(format!("expected {} blocks, found {}", cfg.n_blocks, self.blocks.len()));
        }
        if !cfg.contains(self.agent) {
            return Err(format!("agent {} outside the grid", self.agent));
        }
        let held: Vec<_> = self.blocks.iter().filter(|b| b.grasped).collect();
        if held.len() > 1 {
            return Err("more than one block grasped".into());
        }
        if let Some(b) = held.first() {
            if !self.gripper_closed || b.cell != self.agent {
                return Err("grasped block detached from a closed gripper".into());
            }
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if !cfg.contains(b.cell) {
                return Err(format!("block {i} at {} outside the grid", b.cell));
            }
            if !b.grasped && self.blocks[..i].iter().any(|o| !o.grasped && o.cell == b.cell) {
                return Err(format!("two loose blocks share {}", b.cell));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    ToggleGripper,
    NoOp,
}

impl Action {
    pub const COUNT: usize = 6;
    pub const ALL: [Action; 6] =
        [Action::Up, Action::Down, Action::Left, Action::Right, Action::ToggleGripper, Action::NoOp];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }
}

/// Deterministic transition function.
///
/// Moves clamp at walls and carry a grasped block. The gripper toggle grasps
/// a loose block under the agent, releases a held block onto a free cell,
/// closes on nothing over an empty cell, or reopens an empty closed gripper.
/// Releasing onto an occupied cell does nothing.
pub fn step(cfg: &GridConfig, s: &GridState, a: Action) -> GridState {
    debug_assert!(s.check(cfg).is_ok(), "{:?}", s.check(cfg));
    let mut next = s.clone();
    let moved = |c: Cell| -> Cell {
        match a {
            Action::Up if c.y > 0 => Cell::new(c.x, c.y - 1),
            Action::Down if c.y + 1 < cfg.height => Cell::new(c.x, c.y + 1),
            Action::Left if c.x > 0 => Cell::new(c.x - 1, c.y),
            Action::Right if c.x + 1 < cfg.width => Cell::new(c.x + 1, c.y),
            _ => c,
        }
    };
    match a {
        Action::Up | Action::Down | Action::Left | Action::Right => {
            next.agent = moved(s.agent);
            if let Some(h) = s.held() {
                next.blocks[h].cell = next.agent;
            }
        }
        Action::ToggleGripper => match (s.gripper_closed, s.held()) {
            (false, _) => {
                next.gripper_closed = true;
                if let Some(b) = s.loose_block_at(s.agent) {
                    next.blocks[b].grasped = true;
                }
            }
            (true, Some(h)) => {
                if s.loose_block_at(s.agent).is_none() {
                    next.blocks[h].grasped = false;
                    next.gripper_closed = false;
                }
            }
            (true, None) => next.gripper_closed = false,
        },
        Action::NoOp => {}
    }
    next
}

fn norm(v: u8, extent: u8) -> f64 {
    if extent <= 1 {
        0.0
    } else {
        v as f64 / (extent - 1) as f64
    }
}

/// `[x, y, gripper] ++ [x, y, grasped]` per block, coordinates scaled to `[0, 1]`.
pub fn encode_observation(s: &GridState, cfg: &GridConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(cfg.observation_width());
    encode_observation_into(s, cfg, &mut out);
    out
}

pub fn encode_observation_into(s: &GridState, cfg: &GridConfig, out: &mut Vec<f64>) {
    out.push(norm(s.agent.x, cfg.width));
    out.push(norm(s.agent.y, cfg.height));
    out.push(s.gripper_closed as u8 as f64);
    for b in &s.blocks {
        out.push(norm(b.cell.x, cfg.width));
        out.push(norm(b.cell.y, cfg.height));
        out.push(b.grasped as u8 as f64);
    }
}

/// Inverse of [`encode_observation`].
pub fn decode_observation(features: &[f64], cfg: &GridConfig) -> Result<GridState> {
    if features.len() != cfg.observation_width() {
        return Err(Error::Dimension { expected: cfg.observation_width(), got: features.len() });
    }
    let coord = |v: f64, extent: u8| -> u8 {
        if extent <= 1 {
            0
        } else {
            (v * (extent - 1) as f64).round() as u8
        }
    };
    let blocks = features[3..]
        .chunks(3)
        .map(|c| Block { cell: Cell::new(coord(c[0], cfg.width), coord(c[1], cfg.height)), grasped: c[2] > 0.5 })
        .collect();
    Ok(GridState {
        agent: Cell::new(coord(features[0], cfg.width), coord(features[1], cfg.height)),
        gripper_closed: features[2] > 0.5,
        blocks,
    })
}
