//! Final ABIG score as a function of vocabulary size on a small grid.
//!
//! cargo run --release --example vocab_sweep -- [seeds]

use abig::run::experiments::{aggregate_by_label, sweep_vocab};
use abig::run::presets::preset;

fn main() {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let cfg = preset("desk-vocab-sweep").unwrap().config().unwrap();
    let values = cfg.vocab_values.clone();
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let rows = sweep_vocab(&cfg, &values, &seeds).unwrap();
    for (label, agg) in aggregate_by_label(&rows) {
        println!("|V| = {label:>2}: {:.2} ± {:.2}", agg.mean, agg.err());
    }
}
