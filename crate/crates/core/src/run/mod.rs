//! Iterated interaction frames, baselines, evaluation and transfer.
//!
//! Per-episode generators are derived from `(seed, stream, iteration,
//! episode)`, so results do not depend on the number of workers.

mod config;
pub mod experiments;
pub mod presets;
pub mod rundir;

use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use config::{config_from_layers, load_config, merge_tables, save_config, Method, RunConfig};

use crate::architect::{model_builder, Architect, ArchitectMode, BuilderModel};
use crate::builder::{ActionSelection, BufferRole, BuilderAgent, InteractionBuffer, Transition};
use crate::error::{Error, Result};
use crate::metrics::{MeasurementSet, MetricReport};
use crate::seed::{self, stream};
use crate::world::{reset, transition, ShapeLibrary, TaskSpec};

/// One row of `metrics.csv`. Iteration `i` describes builder `i` (after `i`
/// self-imitation rounds) evaluated with the model fit on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub success_rate: f64,
    pub mean_entropy: f64,
    pub mi_messages: f64,
    pub mi_states: f64,
    /// NaN before the first self-imitation and for untrained methods.
    pub builder_bc_val_acc: f64,
    /// NaN when the architect does not model the builder.
    pub architect_bc_val_acc: f64,
    pub wall_time_s: f64,
    /// Success rate of the collection episodes that trained the next
    /// builder; NaN on the last iteration.
    pub guided_success_rate: f64,
    pub builder_hash: u64,
    pub model_hash: u64,
}

/// What the orchestrator hands to its observer after each iteration.
pub struct Snapshot<'a> {
    pub record: &'a IterationRecord,
    pub builder: &'a BuilderAgent,
    pub model: &'a BuilderModel,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub builder: BuilderAgent,
    pub model: BuilderModel,
    pub records: Vec<IterationRecord>,
    pub measurement: MeasurementSet,
}

impl RunOutcome {
    pub fn final_score(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.success_rate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task: String,
    pub success_rate: f64,
}

/// Selection rule of the builder at evaluation time. The stochastic and
/// random baselines always sample and the deterministic one is argmax by
/// definition; trained builders follow `eval_greedy`.
pub fn eval_selection(cfg: &RunConfig) -> ActionSelection {
    match cfg.method {
        Method::Stochastic | Method::Random => ActionSelection::Sample { temperature: 1.0 },
        Method::Deterministic => ActionSelection::Greedy,
        _ if cfg.eval_greedy => ActionSelection::Greedy,
        _ => ActionSelection::Sample { temperature: cfg.collect_temperature },
    }
}

/// Executes closures per index, serially or on a private thread pool,
/// preserving index order in the output.
pub struct Runner {
    pool: Option<rayon::ThreadPool>,
}

impl Runner {
    pub fn new(workers: usize) -> Result<Self> {
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::config(format!("workers: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { pool })
    }

    pub fn map<T: Send>(&self, n: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
        match &self.pool {
            None => (0..n).map(f).collect(),
            Some(pool) => {
                use rayon::prelude::*;
                pool.install(|| (0..n).into_par_iter().map(&f).collect())
            }
        }
    }
}

pub struct GuidingOutcome {
    pub builder: BuilderAgent,
    pub val_accuracy: f64,
    /// Fraction of collection episodes that reached the goal.
    pub success_rate: f64,
}

/// Transitions gathered by one frame, before any learning.
pub struct FrameData {
    pub buffer: InteractionBuffer,
    pub episodes: usize,
    pub successes: usize,
}

impl FrameData {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes.max(1) as f64
    }
}

struct Episode {
    transitions: Vec<Transition>,
    success: bool,
}

/// Rolls out one episode. `model = None` means uniform messages.
fn episode(
    builder: &BuilderAgent,
    selection: ActionSelection,
    model: Option<&BuilderModel>,
    mcts: &crate::architect::MctsConfig,
    spec: &TaskSpec,
    len: usize,
    rng: &mut seed::Rng,
) -> Result<Episode> {
    let grid = &builder.grid;
    let (mut s, task) = reset(grid, spec, rng);
    let mut architect = model.map(|m| Architect::new(m.clone(), mcts.clone()));
    let mut transitions = Vec::with_capacity(len);
    for _ in 0..len {
        let m = match architect.as_mut() {
            Some(a) => a.act(&s, &task, ArchitectMode::Guiding, rng)?,
            None => rng.random_range(0..builder.vocab_size),
        };
        // The builder sees only the state and the message.
        let action = builder.act_with(&s, m, selection, rng)?;
        let (next, _, done) = transition(grid, &s, action, &task);
        if let Some(a) = architect.as_mut() {
            a.observe(m, &next);
        }
        transitions.push(Transition { state: s, message: m, action, next: next.clone() });
        s = next;
        if done {
            return Ok(Episode { transitions, success: true });
        }
    }
    Ok(Episode { transitions, success: false })
}

/// Holds the per-run invariants shared by frames.
pub struct Orchestrator {
    pub cfg: RunConfig,
    runner: Runner,
    task: TaskSpec,
    training_tasks: Vec<TaskSpec>,
    shapes: ShapeLibrary,
}

impl Orchestrator {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let shapes = cfg.shapes()?;
        let task = cfg.task_spec(&shapes)?;
        let training_tasks = cfg.training_tasks(&shapes)?;
        Ok(Self { runner: Runner::new(cfg.workers)?, task, training_tasks, shapes, cfg })
    }

    pub fn shapes(&self) -> &ShapeLibrary {
        &self.shapes
    }

    fn frame_episodes(&self) -> usize {
        self.cfg.episodes_per_iteration / 2
    }

    fn collect(&self, builder: &BuilderAgent, model: Option<&BuilderModel>, tag: u64, iteration: usize) -> Result<Vec<Episode>> {
        let selection = builder.selection;
        self.runner.map(self.frame_episodes(), |ep| {
            let mut rng = seed::rng(self.cfg.seed, &[tag, iteration as u64, ep as u64]);
            let spec = if self.training_tasks.len() > 1 {
                &self.training_tasks[rng.random_range(0..self.training_tasks.len())]
            } else {
                &self.training_tasks[0]
            };
            let spec = if tag == stream::MODELLING { &self.task } else { spec };
            episode(builder, selection, model, &self.cfg.mcts, spec, self.cfg.grid.episode_len, &mut rng)
        })
    }

    fn frame_data(&self, builder: &BuilderAgent, model: Option<&BuilderModel>, tag: u64, iteration: usize) -> Result<FrameData> {
        let role = if tag == stream::MODELLING { BufferRole::Architect } else { BufferRole::Builder };
        let mut data = FrameData { buffer: InteractionBuffer::new(role, &self.cfg.grid), episodes: 0, successes: 0 };
        for ep in self.collect(builder, model, tag, iteration)? {
            data.episodes += 1;
            data.successes += ep.success as usize;
            for t in ep.transitions {
                data.buffer.push(t)?;
            }
        }
        Ok(data)
    }

    /// The architect's buffer for a modelling frame: uniform messages to a
    /// frozen builder.
    pub fn modelling_data(&self, builder: &BuilderAgent, iteration: usize) -> Result<FrameData> {
        self.frame_data(builder, None, stream::MODELLING, iteration)
    }

    /// The builder's buffer for a guiding frame (random messages when
    /// `model` is `None`).
    pub fn guiding_data(&self, builder: &BuilderAgent, model: Option<&BuilderModel>, iteration: usize) -> Result<FrameData> {
        self.frame_data(builder, model, stream::GUIDING, iteration)
    }

    /// Modelling data followed by a fresh behavioral-cloning fit of the
    /// builder model.
    pub fn modelling_frame(&self, builder: &BuilderAgent, iteration: usize) -> Result<(BuilderModel, f64)> {
        let before = builder.fingerprint();
        let mut data = self.modelling_data(builder, iteration)?;
        let bc = self.cfg.architect_bc.clone().with_seed(seed::derive(self.cfg.seed, &[stream::ARCHITECT_BC, iteration as u64]));
        let (model, history) = model_builder(&data.buffer, self.cfg.vocab_size, &self.cfg.architect_hidden, &bc)?;
        data.buffer.flush();
        stationary(before, builder.fingerprint(), "builder", "modelling")?;
        Ok((model, history.best_val_accuracy))
    }

    /// Guiding data followed by self-imitation from a fresh network.
    pub fn guiding_frame(&self, builder: &BuilderAgent, model: Option<&BuilderModel>, iteration: usize) -> Result<GuidingOutcome> {
        let before = model.map(|m| m.agent.fingerprint());
        let mut data = self.guiding_data(builder, model, iteration)?;
        let success_rate = data.success_rate();
        let bc = self.cfg.builder_bc.clone().with_seed(seed::derive(self.cfg.seed, &[stream::BUILDER_BC, iteration as u64]));
        let (next, history) = builder.self_imitate(&data.buffer, &bc)?;
        data.buffer.flush();
        if let (Some(b), Some(m)) = (before, model) {
            stationary(b, m.agent.fingerprint(), "architect model", "guiding")?;
        }
        Ok(GuidingOutcome { builder: next, val_accuracy: history.best_val_accuracy, success_rate })
    }

    /// Fraction of guided episodes that reach the goal within `eval_len`.
    pub fn evaluate(&self, builder: &BuilderAgent, model: &BuilderModel, spec: &TaskSpec, tag: &[u64]) -> Result<f64> {
        let selection = eval_selection(&self.cfg);
        let wins = self.runner.map(self.cfg.eval_episodes, |ep| {
            let mut path = tag.to_vec();
            path.push(ep as u64);
            let mut rng = seed::rng(self.cfg.seed, &path);
            Ok(episode(builder, selection, Some(model), &self.cfg.mcts, spec, self.cfg.eval_len, &mut rng)?.success)
        })?;
        Ok(wins.iter().filter(|&&w| w).count() as f64 / self.cfg.eval_episodes.max(1) as f64)
    }

    fn exact_model(&self, builder: &BuilderAgent) -> BuilderModel {
        BuilderModel::exact(builder, eval_selection(&self.cfg))
    }

    fn initial_builder(&self) -> Result<BuilderAgent> {
        let c = &self.cfg;
        let collect = ActionSelection::Sample { temperature: c.collect_temperature };
        Ok(match c.method {
            Method::Random => BuilderAgent::uniform(&c.grid, c.vocab_size),
            Method::Stochastic | Method::Deterministic => {
                let s = seed::derive(c.seed, &[stream::BASELINE_NET]);
                BuilderAgent::fresh(&c.grid, c.vocab_size, &c.builder_hidden, eval_selection(c), s)?
            }
            _ => {
                let s = seed::derive(c.seed, &[stream::BUILDER_INIT]);
                BuilderAgent::fresh(&c.grid, c.vocab_size, &c.builder_hidden, collect, s)?
            }
        })
    }

    /// Runs the configured method end to end, calling `observe` after every
    /// iteration record.
    pub fn run(&self, observe: &mut dyn FnMut(Snapshot<'_>) -> Result<()>) -> Result<RunOutcome> {
        let c = &self.cfg;
        let measurement = MeasurementSet::build(&c.grid, c.measurement_size, seed::derive(c.seed, &[stream::MEASUREMENT]))?;
        let mut builder = self.initial_builder()?;
        let mut records = Vec::new();
        let mut builder_acc = f64::NAN;
        let last = self.final_iteration();
        let mut model = self.exact_model(&builder);
        for i in 0..=last {
            let start = Instant::now();
            let mut architect_acc = f64::NAN;
            model = if matches!(c.method, Method::Abig | Method::AllGoals) {
                let (m, acc) = self.modelling_frame(&builder, i)?;
                architect_acc = acc;
                m
            } else {
                self.exact_model(&builder)
            };
            let success_rate = self.evaluate(&builder, &model, &self.task, &[stream::EVAL, i as u64])?;
            let report = if measurement.is_empty() { MetricReport::default() } else { measurement.report(&builder)? };
            let mut record = IterationRecord {
                iteration: i,
                success_rate,
                mean_entropy: report.mean_entropy,
                mi_messages: report.mi_messages,
                mi_states: report.mi_states,
                builder_bc_val_acc: builder_acc,
                architect_bc_val_acc: architect_acc,
                wall_time_s: 0.0,
                guided_success_rate: f64::NAN,
                builder_hash: builder.fingerprint(),
                model_hash: model.agent.fingerprint(),
            };
            if i < last {
                let guide = (c.method != Method::NoIntent).then_some(&model);
                let g = self.guiding_frame(&builder, guide, i)?;
                record.wall_time_s = start.elapsed().as_secs_f64();
                record.guided_success_rate = g.success_rate;
                observe(Snapshot { record: &record, builder: &builder, model: &model })?;
                builder = g.builder;
                builder_acc = g.val_accuracy;
            } else {
                record.wall_time_s = start.elapsed().as_secs_f64();
                observe(Snapshot { record: &record, builder: &builder, model: &model })?;
            }
            records.push(record);
        }
        Ok(RunOutcome { builder, model, records, measurement })
    }

    /// Index of the last iteration record.
    pub fn final_iteration(&self) -> usize {
        if self.cfg.method.trains() {
            self.cfg.n_iterations
        } else {
            0
        }
    }

    /// Evaluates a trained pair on each task, with no further learning.
    /// Episodes reuse the final evaluation's seeds, so the training task
    /// scores exactly as in the last iteration record.
    pub fn transfer(&self, builder: &BuilderAgent, model: &BuilderModel, tasks: &[TaskSpec]) -> Result<Vec<TaskScore>> {
        tasks
            .iter()
            .map(|spec| {
                spec.validate(&self.cfg.grid)?;
                let success_rate = self.evaluate(builder, model, spec, &[stream::EVAL, self.final_iteration() as u64])?;
                Ok(TaskScore { task: spec.name(), success_rate })
            })
            .collect()
    }
}

fn stationary(before: u64, after: u64, who: &str, frame: &str) -> Result<()> {
    if before != after {
        return Err(Error::config(format!("{who} changed during a {frame} frame")));
    }
    Ok(())
}

/// Convenience wrapper: validated run without an observer.
pub fn run_abig(cfg: &RunConfig) -> Result<RunOutcome> {
    Orchestrator::new(cfg.clone())?.run(&mut |_| Ok(()))
}
