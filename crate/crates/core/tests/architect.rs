use std::collections::{HashSet, VecDeque};

use abig::architect::{
    backup_returns, mcts_decide, simulate_edge, ucb_score, Architect, ArchitectMode, BuilderModel, FinalChoice,
    MctsConfig, SearchTree,
};
use abig::builder::{ActionSelection, BuilderAgent, Scratch, Scripted};
use abig::seed;
use abig::world::{is_success, reset, transition, Action, Block, Cell, GridConfig, GridState, Goal, Task, TaskSpec};

fn onehot(a: Action) -> [f64; Action::COUNT] {
    let mut p = [0.0; Action::COUNT];
    p[a.index()] = 1.0;
    p
}

/// Agent standing on a loose block: toggling grasps it, anything else does not.
fn bandit() -> (GridConfig, GridState, Task, BuilderModel) {
    let grid = GridConfig::new(3, 3, 1, 40);
    let s = GridState {
        agent: Cell::new(1, 1),
        gripper_closed: false,
        blocks: vec![Block { cell: Cell::new(1, 1), grasped: false }],
    };
    let script = Scripted::new(|_, m| if m == 0 { onehot(Action::ToggleGripper) } else { onehot(Action::NoOp) });
    let builder = BuilderAgent::scripted(script, &grid, 2);
    let model = BuilderModel::exact(&builder, ActionSelection::Greedy);
    (grid, s, Task::new(Goal::Grasp), model)
}

/// Each message maps to a distinct deterministic action.
fn controllable(grid: &GridConfig) -> BuilderModel {
    let script = Scripted::new(|_, m| onehot(Action::ALL[m]));
    BuilderModel::exact(&BuilderAgent::scripted(script, grid, Action::COUNT), ActionSelection::Greedy)
}

#[test]
fn ucb_hand_values() {
    let c = std::f64::consts::SQRT_2;
    let u1 = ucb_score(0.5, 1, 2, c);
    let u2 = ucb_score(0.1, 1, 2, c);
    assert!((u1 - (0.5 + c * 2f64.ln().sqrt())).abs() < 1e-9);
    assert!((u1 - 1.677_410_5).abs() < 1e-6);
    assert!((u2 - 1.277_410_5).abs() < 1e-6);
    assert!(u1 > u2);
}

#[test]
fn depth_one_backup() {
    let g = backup_returns(&[0.0], 0.4, 0.95);
    assert!((g[0] - 0.38).abs() < 1e-12);
    let g = backup_returns(&[0.0, 1.0], 0.0, 0.95);
    assert!((g[0] - 0.95).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
}

fn bandit_hits(final_choice: FinalChoice, reuse_tree: bool, trials: u64) -> u64 {
    let (_, s, task, model) = bandit();
    let cfg = MctsConfig { final_choice, reuse_tree, ..MctsConfig::default() };
    let mut hits = 0;
    for t in 0..trials {
        let mut rng = seed::rng(11, &[t]);
        let mut tree = SearchTree::new();
        if mcts_decide(&mut tree, &s, &model, &task, &cfg, &mut rng).unwrap() == 0 {
            hits += 1;
        }
    }
    hits
}

#[test]
fn deterministic_bandit_picks_the_winning_message() {
    assert_eq!(bandit_hits(MctsConfig::default().final_choice, true, 100), 100);
    assert_eq!(bandit_hits(FinalChoice::MaxQ, true, 100), 100);
}

#[test]
fn reuse_does_not_change_bandit_decisions() {
    // Second decision from the same root: a reused tree carries the first
    // search's statistics, a fresh tree starts over.
    let (_, s, task, model) = bandit();
    let mut counts = [0u64; 2];
    for (k, reuse) in [true, false].into_iter().enumerate() {
        let cfg = MctsConfig { reuse_tree: reuse, ..MctsConfig::default() };
        for t in 0..200u64 {
            let mut rng = seed::rng(12, &[t, k as u64]);
            let mut tree = SearchTree::new();
            mcts_decide(&mut tree, &s, &model, &task, &cfg, &mut rng).unwrap();
            if mcts_decide(&mut tree, &s, &model, &task, &cfg, &mut rng).unwrap() == 0 {
                counts[k] += 1;
            }
        }
    }
    // Two-proportion z-test at alpha 0.05; identical counts pass trivially.
    let (p1, p2) = (counts[0] as f64 / 200.0, counts[1] as f64 / 200.0);
    let pooled = (p1 + p2) / 2.0;
    let se = (pooled * (1.0 - pooled) * (2.0 / 200.0)).sqrt();
    assert!(se == 0.0 && p1 == p2 || ((p1 - p2) / se).abs() < 1.96, "{counts:?}");
}

#[test]
fn bookkeeping_holds_over_many_simulations() {
    let grid = GridConfig::new(4, 4, 2, 40);
    let mut rng = seed::rng(13, &[]);
    let (s, task) = reset(&grid, &TaskSpec::place(), &mut rng);
    let script = Scripted::new(|s: &GridState, m| {
        let mut p = [0.05; Action::COUNT];
        p[(m + s.agent.x as usize) % Action::COUNT] = 0.75;
        p
    });
    let model = BuilderModel::exact(&BuilderAgent::scripted(script, &grid, 4), ActionSelection::Greedy);
    let cfg = MctsConfig { budget: 100_000, max_tree_depth: 30, ..MctsConfig::default() };
    let mut tree = SearchTree::new();
    mcts_decide(&mut tree, &s, &model, &task, &cfg, &mut rng).unwrap();

    assert_eq!(tree.simulations(), 100_000);
    let root = tree.root().unwrap();
    assert_eq!(root.total_visits(), 100_000);
    assert!(tree.len() <= 100_001);
    for node in tree.nodes() {
        assert!(node.depth <= cfg.max_tree_depth);
        assert!((0.0..=0.5).contains(&node.value));
        for e in &node.edges {
            if e.visits == 0 {
                assert_eq!(e.return_sum, 0.0);
                assert!(e.children().is_empty());
                continue;
            }
            assert!((e.q() * e.visits as f64 - e.return_sum).abs() < 1e-9 * e.visits as f64);
            assert!((0.0..=1.0 + 1e-12).contains(&e.q()));
            assert!(e.child_count() as u64 <= e.visits);
            // Visits through an edge are those of its non-terminal children
            // plus the simulations that stopped on one of them.
            let below: u64 = e.children().iter().map(|&(_, id, _)| tree.node(id).total_visits()).sum();
            assert!(below <= e.visits);
        }
    }
}

#[test]
fn tree_reuse_keeps_the_realized_subtree() {
    let grid = GridConfig::new(3, 3, 1, 40);
    let mut rng = seed::rng(14, &[]);
    let (s, task) = reset(&grid, &TaskSpec::grasp(), &mut rng);
    let model = controllable(&grid);
    let mut tree = SearchTree::new();
    let cfg = MctsConfig::default();
    let m = mcts_decide(&mut tree, &s, &model, &task, &cfg, &mut rng).unwrap();
    let (next, _, done) = transition(&grid, &s, Action::ALL[m], &task);
    assert!(!done || is_success(&next, &task));
    let child_visits = tree.root().unwrap().edges[m]
        .children()
        .iter()
        .find(|(c, _, _)| *c == next)
        .map(|&(_, id, _)| tree.node(id).total_visits());
    tree.advance(m, &next);
    match child_visits {
        Some(v) if !done => {
            assert_eq!(tree.root().unwrap().state, next);
            assert_eq!(tree.simulations(), v);
        }
        _ => assert!(tree.is_empty()),
    }
    // Unknown outcome empties the tree.
    tree.advance(0, &GridState { agent: Cell::new(2, 2), ..s.clone() });
    if tree.root().is_some_and(|r| r.state != GridState { agent: Cell::new(2, 2), ..s }) {
        panic!("advance kept a mismatched root");
    }
}

fn bfs_optimal(grid: &GridConfig, s: &GridState, task: &Task) -> usize {
    let mut seen = HashSet::from([s.clone()]);
    let mut queue = VecDeque::from([(s.clone(), 0usize)]);
    while let Some((u, d)) = queue.pop_front() {
        for a in Action::ALL {
            let (v, _, done) = transition(grid, &u, a, task);
            if done {
                return d + 1;
            }
            if seen.insert(v.clone()) {
                queue.push_back((v, d + 1));
            }
        }
    }
    usize::MAX
}

#[test]
fn controllable_builder_is_guided_near_optimally() {
    let grid = GridConfig::new(3, 3, 1, 40);
    let model = controllable(&grid);
    let mut architect = Architect::new(model.clone(), MctsConfig::default());
    let script = Scripted::new(|_, m| onehot(Action::ALL[m]));
    let builder = BuilderAgent::scripted(script, &grid, Action::COUNT);
    let mut good = 0;
    for ep in 0..100u64 {
        let mut rng = seed::rng(15, &[ep]);
        let (mut s, task) = reset(&grid, &TaskSpec::grasp(), &mut rng);
        let optimal = bfs_optimal(&grid, &s, &task);
        architect.reset_episode();
        let mut steps = None;
        for t in 0..grid.episode_len {
            let m = architect.act(&s, &task, ArchitectMode::Guiding, &mut rng).unwrap();
            let a = builder.act(&s, m, &mut rng).unwrap();
            let (next, _, done) = transition(&grid, &s, a, &task);
            architect.observe(m, &next);
            s = next;
            if done {
                steps = Some(t + 1);
                break;
            }
        }
        if steps.is_some_and(|n| n <= optimal + 1) {
            good += 1;
        }
    }
    assert!(good >= 95, "{good}/100");
}

#[test]
fn random_mode_is_uniform() {
    let grid = GridConfig::new(3, 3, 1, 40);
    let mut architect = Architect::new(controllable(&grid), MctsConfig::default());
    let mut rng = seed::rng(16, &[]);
    let (s, task) = reset(&grid, &TaskSpec::grasp(), &mut rng);
    let mut counts = [0u32; Action::COUNT];
    for _ in 0..10_000 {
        counts[architect.act(&s, &task, ArchitectMode::Random, &mut rng).unwrap()] += 1;
    }
    let mean = 10_000.0 / 6.0;
    let sd = (10_000.0 * (1.0 / 6.0) * (5.0 / 6.0f64)).sqrt();
    for c in counts {
        assert!((f64::from(c) - mean).abs() < 3.0 * sd, "{counts:?}");
    }
}

#[test]
fn simulated_edges_match_exact_enumeration() {
    let grid = GridConfig::new(2, 2, 1, 40);
    let mut rng = seed::rng(17, &[]);
    let (s, task) = reset(&grid, &TaskSpec::grasp(), &mut rng);
    let probs = [0.3, 0.1, 0.2, 0.15, 0.2, 0.05];
    let script = Scripted::new(move |_, _| probs);
    let model = BuilderModel::exact(&BuilderAgent::scripted(script, &grid, 3), ActionSelection::Greedy);

    let mut exact: Vec<(GridState, f64)> = Vec::new();
    let mut exact_reward = 0.0;
    for (a, p) in Action::ALL.into_iter().zip(probs) {
        let (next, r, _) = transition(&grid, &s, a, &task);
        exact_reward += p * r;
        match exact.iter_mut().find(|(n, _)| *n == next) {
            Some(e) => e.1 += p,
            None => exact.push((next, p)),
        }
    }
    let n = 10_000;
    let mut empirical = vec![0.0; exact.len()];
    let mut reward = 0.0;
    let mut scratch = Scratch::default();
    for _ in 0..n {
        let e = simulate_edge(&model, &s, 1, &task, &mut scratch, &mut rng).unwrap();
        let i = exact.iter().position(|(x, _)| *x == e.next).expect("reachable outcome");
        empirical[i] += 1.0 / n as f64;
        reward += e.reward / n as f64;
    }
    let tv: f64 = exact.iter().zip(&empirical).map(|((_, p), q)| (p - q).abs()).sum::<f64>() / 2.0;
    assert!(tv < 0.05, "tv {tv}");
    assert!((reward - exact_reward).abs() < 0.02);
}
