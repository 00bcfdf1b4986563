//! Trains an architect-builder pair at desk scale and prints one line per
//! iteration: evaluation score, builder entropy and the two mutual
//! informations.
//!
//! cargo run --release --example desk_training -- [method] [seed] [iterations]

use abig::run::presets::preset;
use abig::run::{Method, Orchestrator, RunConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let method: Method = args.next().map_or(Ok(Method::Abig), |s| s.parse()).expect("method");
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let base = preset("desk-place").unwrap().config().unwrap();
    let n_iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(base.n_iterations);
    let cfg = RunConfig { method, seed, n_iterations, ..base };

    println!("iter  score  entropy   I_m    I_s   builder-acc  model-acc");
    Orchestrator::new(cfg)
        .unwrap()
        .run(&mut |snap| {
            let r = snap.record;
            println!(
                "{:>4}  {:>5.2}  {:>7.3}  {:.3}  {:.3}  {:>11.3}  {:>9.3}",
                r.iteration, r.success_rate, r.mean_entropy, r.mi_messages, r.mi_states, r.builder_bc_val_acc, r.architect_bc_val_acc
            );
            Ok(())
        })
        .unwrap();
}
