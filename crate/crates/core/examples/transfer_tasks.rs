//! Trains on Place at desk scale, then evaluates the frozen pair on every
//! training task without further learning.
//!
//! cargo run --release --example transfer_tasks -- [seed] [iterations]

use abig::run::presets::preset;
use abig::run::{run_abig, Orchestrator, RunConfig};
use abig::world::TaskSpec;

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let base = preset("desk-place").unwrap().config().unwrap();
    let n_iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(base.n_iterations);
    // Lines need two blocks.
    let grid = abig::world::GridConfig { n_blocks: 2, ..base.grid.clone() };
    let cfg = RunConfig { seed, n_iterations, grid, ..base };

    let out = run_abig(&cfg).unwrap();
    println!("trained on place: {:.2}", out.final_score());
    let scores = Orchestrator::new(cfg).unwrap().transfer(&out.builder, &out.model, &TaskSpec::training_set()).unwrap();
    for s in scores {
        println!("{:>8}: {:.2}", s.task, s.success_rate);
    }
}
