//! Leaf-value heuristic for tree search.
//!
//! Each task gets a step count `d` to success built from Manhattan distances
//! (reach a block, toggle, carry, toggle). The value is `0.5 * gamma^(d-1)`,
//! i.e. half the discounted sparse return an optimal builder would collect
//! after `d` steps, and `0.5` on success states.

use super::grid::{Cell, GridConfig, GridState};
use super::task::{is_success, Goal, Task};

/// Steps-to-go estimate; `None` when no target layout fits the grid.
pub fn steps_to_go(s: &GridState, task: &Task, cfg: &GridConfig) -> Option<u32> {
    if is_success(s, task) {
        return Some(0);
    }
    // An empty closed gripper must reopen before it can grasp.
    let reopen = u32::from(s.gripper_closed && s.held().is_none());
    let d = match &task.goal {
        Goal::Grasp => s.blocks.iter().map(|b| s.agent.manhattan(b.cell) + 1).min()?,
        Goal::Place(target) => match s.held() {
            Some(_) => s.agent.manhattan(*target) + 1,
            None => s
                .blocks
                .iter()
                .map(|b| s.agent.manhattan(b.cell) + 1 + b.cell.manhattan(*target) + 1)
                .min()?,
        },
        Goal::HLine | Goal::VLine => {
            let horizontal = task.goal == Goal::HLine;
            let n = s.blocks.len() as u8;
            let (span, lanes) = if horizontal { (cfg.width, cfg.height) } else { (cfg.height, cfg.width) };
            if n > span {
                return None;
            }
            let mut best: Option<u32> = None;
            for lane in 0..lanes {
                for start in 0..=span - n {
                    let cells: Vec<Cell> = (start..start + n)
                        .map(|i| if horizontal { Cell::new(i, lane) } else { Cell::new(lane, i) })
                        .collect();
                    let d = greedy_assignment(s, &cells);
                    best = Some(best.map_or(d, |b| b.min(d)));
                }
            }
            best?
        }
        Goal::Shape(target) => {
            if task.translation_invariant {
                let w = target.iter().map(|c| c.x).max()? - target.iter().map(|c| c.x).min()?;
                let h = target.iter().map(|c| c.y).max()? - target.iter().map(|c| c.y).min()?;
                let (mx, my) = (target.iter().map(|c| c.x).min()?, target.iter().map(|c| c.y).min()?);
                let mut best: Option<u32> = None;
                for oy in 0..cfg.height.checked_sub(h)? {
                    for ox in 0..cfg.width.checked_sub(w)? {
                        let cells: Vec<Cell> =
                            target.iter().map(|c| Cell::new(c.x - mx + ox, c.y - my + oy)).collect();
                        let d = greedy_assignment(s, &cells);
                        best = Some(best.map_or(d, |b| b.min(d)));
                    }
                }
                best?
            } else {
                greedy_assignment(s, target)
            }
        }
    };
    Some(d + reopen)
}

/// Greedy block-to-cell matching; the agent walks from drop to drop.
fn greedy_assignment(s: &GridState, targets: &[Cell]) -> u32 {
    let mut free: Vec<Cell> = targets.to_vec();
    let mut pending: Vec<usize> = Vec::with_capacity(s.blocks.len());
    for (i, b) in s.blocks.iter().enumerate() {
        match free.iter().position(|&c| !b.grasped && c == b.cell) {
            Some(k) => {
                free.swap_remove(k);
            }
            None => pending.push(i),
        }
    }
    let mut pos = s.agent;
    let mut total = 0;
    // A held block is carried to its nearest free target first.
    if let Some(h) = s.held() {
        if let Some(pi) = pending.iter().position(|&i| i == h) {
            pending.swap_remove(pi);
            if let Some((k, &c)) = free.iter().enumerate().min_by_key(|(_, c)| pos.manhattan(**c)) {
                total += pos.manhattan(c) + 1;
                pos = c;
                free.swap_remove(k);
            }
        }
    }
    while !pending.is_empty() && !free.is_empty() {
        let mut best = (u32::MAX, 0, 0);
        for (pi, &b) in pending.iter().enumerate() {
            let cell = s.blocks[b].cell;
            for (k, &c) in free.iter().enumerate() {
                let cost = pos.manhattan(cell) + 1 + cell.manhattan(c) + 1;
                if cost < best.0 {
                    best = (cost, pi, k);
                }
            }
        }
        let (cost, pi, k) = best;
        total += cost;
        pos = free[k];
        pending.swap_remove(pi);
        free.swap_remove(k);
    }
    total
}

/// Heuristic leaf value in `[0, 0.5]`.
pub fn heuristic_value(s: &GridState, task: &Task, cfg: &GridConfig, gamma: f64) -> f64 {
    match steps_to_go(s, task, cfg) {
        Some(0) => 0.5,
        Some(d) => 0.5 * gamma.powi(d as i32 - 1),
        None => 0.0,
    }
}
