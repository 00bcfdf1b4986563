//! Walks a scripted agent through a Place episode and prints the heuristic
//! value of each state along the way.

use abig::world::{heuristic_value, reset, steps_to_go, transition, Action, GridState, TaskSpec};
use rand::SeedableRng;

fn draw(s: &GridState, w: u8, h: u8) -> String {
    let mut rows = Vec::new();
    for y in 0..h {
        let row: String = (0..w)
            .map(|x| {
                let agent = s.agent.x == x && s.agent.y == y;
                let block = s.blocks.iter().any(|b| b.cell.x == x && b.cell.y == y);
                match (agent, block) {
                    (true, true) => 'A',
                    (true, false) => 'a',
                    (false, true) => '#',
                    _ => '.',
                }
            })
            .collect();
        rows.push(row);
    }
    rows.join("\n")
}

/// Row 0 is the top edge; `Up` decreases y.
/// Greedy walk: toward the block when empty-handed, toward `goal` when carrying.
fn scripted(s: &GridState, goal: (u8, u8)) -> Action {
    let carrying = s.held().is_some();
    let (tx, ty) = if carrying { goal } else { (s.blocks[0].cell.x, s.blocks[0].cell.y) };
    if (s.agent.x, s.agent.y) == (tx, ty) {
        // Grasps, releases, or reopens an empty closed gripper.
        return Action::ToggleGripper;
    }
    if s.agent.x < tx {
        Action::Right
    } else if s.agent.x > tx {
        Action::Left
    } else if s.agent.y < ty {
        Action::Down
    } else {
        Action::Up
    }
}

fn main() {
    let grid = abig::world::GridConfig::new(4, 4, 1, 40);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let (mut s, task) = reset(&grid, &TaskSpec::place(), &mut rng);
    let goal = match task.goal {
        abig::world::Goal::Place(c) => (c.x, c.y),
        _ => unreachable!(),
    };
    println!("task {task:?}\n{}\n", draw(&s, 4, 4));
    for t in 0..grid.episode_len {
        let a = scripted(&s, goal);
        let (next, r, done) = transition(&grid, &s, a, &task);
        s = next;
        let d = steps_to_go(&s, &task, &grid);
        println!("t={t:<2} {a:?} reward {r} steps-to-go {d:?} value {:.4}", heuristic_value(&s, &task, &grid, 0.95));
        if done {
            println!("{}", draw(&s, 4, 4));
            break;
        }
    }
}
