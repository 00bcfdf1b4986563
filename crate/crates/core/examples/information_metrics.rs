//! Entropy and mutual-information diagnostics on hand-built policies, plus a
//! Welch comparison of two score samples.

use abig::metrics::{mean_entropy, mutual_informations, welch_t_test, PolicyTable};

fn show(name: &str, t: &PolicyTable) {
    let (im, is) = mutual_informations(t);
    println!("{name:<22} H(A|S,M) {:.3}  I_m {im:.3}  I_s {is:.3}", mean_entropy(t));
}

fn onehot(i: usize) -> Vec<f64> {
    let mut v = vec![0.0; 6];
    v[i] = 1.0;
    v
}

fn main() {
    let (states, messages) = (8, 6);
    show("uniform", &PolicyTable::uniform_states(vec![vec![vec![1.0 / 6.0; 6]; messages]; states]));
    // Message m always means action m.
    show("message-driven", &PolicyTable::uniform_states(vec![(0..messages).map(onehot).collect(); states]));
    // The state alone decides; messages are ignored.
    show("state-driven", &PolicyTable::uniform_states((0..states).map(|s| vec![onehot(s % 6); messages]).collect()));

    let abig = [0.42, 0.38, 0.51, 0.47, 0.40];
    let baseline = [0.12, 0.20, 0.08, 0.15, 0.11];
    let w = welch_t_test(&abig, &baseline).unwrap();
    println!("welch t {:.3}, dof {:.2}, p {:.2e}", w.t, w.dof, w.p);
}
