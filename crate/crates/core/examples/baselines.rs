//! Untrained builders guided by an architect that knows their exact policy:
//! uniform, stochastic random network, and argmax random network.
//!
//! cargo run --release --example baselines -- [seeds]

use abig::run::experiments::{aggregate_by_label, scores};
use abig::run::presets::preset;
use abig::run::Method;

fn main() {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = preset("desk-place").unwrap().config().unwrap();
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let rows = scores(&cfg, &[Method::Random, Method::Stochastic, Method::Deterministic], &seeds).unwrap();
    for (label, agg) in aggregate_by_label(&rows) {
        println!("{label:<14} {:.2} ± {:.2}", agg.mean, agg.err());
    }
}
