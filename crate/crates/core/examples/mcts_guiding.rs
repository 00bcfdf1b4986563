//! An architect plans with UCT over an exact model of a noisy builder that
//! mostly follows message `m` as action `m`, and steers it to the goal.
//!
//! cargo run --release --example mcts_guiding -- [follow probability]

use abig::architect::{Architect, ArchitectMode, BuilderModel, MctsConfig};
use abig::builder::{ActionSelection, BuilderAgent, Scripted};
use abig::world::{reset, transition, Action, GridConfig, TaskSpec};

fn main() {
    let follow: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.7);
    let grid = GridConfig::new(4, 4, 1, 40);
    let noisy = Scripted::new(move |_, m| {
        let mut p = [(1.0 - follow) / 5.0; Action::COUNT];
        p[m] = follow;
        p
    });
    let builder = BuilderAgent::scripted(noisy, &grid, Action::COUNT);
    let model = BuilderModel::exact(&builder, ActionSelection::Greedy);
    let mut architect = Architect::new(model, MctsConfig::default());
    let mut rng = abig::seed::rng(11, &[]);

    let (episodes, mut wins, mut steps) = (20, 0, 0);
    for _ in 0..episodes {
        let (mut s, task) = reset(&grid, &TaskSpec::place(), &mut rng);
        architect.reset_episode();
        for t in 0..grid.episode_len {
            let m = architect.act(&s, &task, ArchitectMode::Guiding, &mut rng).unwrap();
            let a = builder.act_with(&s, m, ActionSelection::Sample { temperature: 1.0 }, &mut rng).unwrap();
            let (next, _, done) = transition(&grid, &s, a, &task);
            architect.observe(m, &next);
            s = next;
            if done {
                wins += 1;
                steps += t + 1;
                break;
            }
        }
    }
    println!("follow probability {follow}: {wins}/{episodes} Place episodes solved, {:.1} steps on average", steps as f64 / wins.max(1) as f64);
}
