//! Single-state, two-message, two-action toy problem: ABIG against the
//! no-intent baseline from three initial builder preferences.
//!
//! cargo run --release --example toy_problem -- [seeds]

use abig::run::experiments::toy_grid;
use abig::toy::{ToyCondition, ToyConfig, ToyMethod};

fn main() {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let cells = toy_grid(&ToyCondition::ALL, &[ToyMethod::Abig, ToyMethod::NoIntent], seeds, &ToyConfig::default());
    println!("{:<14} {:<10} {:>6} {:>10}", "condition", "method", "wins", "converged");
    for c in cells {
        println!("{:<14} {:<10} {:>6} {:>10}", format!("{:?}", c.condition), format!("{:?}", c.method), c.wins, c.converged);
    }
}
