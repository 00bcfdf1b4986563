//! Multi-run experiments built on the orchestrator, with their persistence.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::rundir::{provenance, MetricsRow, RunDir, Summary};
use super::{Method, Orchestrator, RunConfig, RunOutcome, TaskScore};
use crate::error::{Error, Result};
use crate::metrics::{mean, sem};
use crate::toy::{run_toy, ToyCondition, ToyConfig, ToyMethod};

/// Sample mean with its standard error; reports quote `mean ± 2·sem`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub sem: f64,
}

impl Aggregate {
    pub fn of(xs: &[f64]) -> Self {
        Self { n: xs.len(), mean: if xs.is_empty() { f64::NAN } else { mean(xs) }, sem: sem(xs) }
    }

    /// Half-width of the error bar.
    pub fn err(&self) -> f64 {
        2.0 * self.sem
    }
}

fn summary(cfg: &RunConfig, out: &RunOutcome, transfer: Vec<TaskScore>) -> Summary {
    let last = out.records.last();
    Summary {
        provenance: provenance(),
        method: cfg.method,
        task: cfg.task.clone(),
        seed: cfg.seed,
        iterations: out.records.len(),
        final_success_rate: out.final_score(),
        final_mean_entropy: last.map_or(f64::NAN, |r| r.mean_entropy),
        final_mi_messages: last.map_or(f64::NAN, |r| r.mi_messages),
        final_mi_states: last.map_or(f64::NAN, |r| r.mi_states),
        total_wall_time_s: out.records.iter().map(|r| r.wall_time_s).sum(),
        transfer,
        config: cfg.clone(),
    }
}

/// Runs `cfg`, streaming metrics and checkpoints into `dir` when given.
/// The summary is written only once the run has finished.
pub fn train(cfg: &RunConfig, dir: Option<&RunDir>) -> Result<RunOutcome> {
    let orch = Orchestrator::new(cfg.clone())?;
    if let Some(d) = dir {
        d.write_config(cfg)?;
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let out = orch.run(&mut |snap| {
        if let Some(d) = dir {
            rows.push(MetricsRow::from_record(snap.record, cfg.record_wall_time));
            records.push(snap.record.clone());
            d.write_metrics(&rows)?;
            d.write_timings(&records)?;
            if cfg.checkpoints {
                d.save_checkpoint(snap.record.iteration, cfg.seed, snap.builder, snap.model)?;
            }
        }
        Ok(())
    })?;
    if let Some(d) = dir {
        d.write_measurement(&out.measurement)?;
        d.write_summary(&summary(cfg, &out, Vec::new()))?;
    }
    Ok(out)
}

/// Trains on `cfg.task`, then evaluates the final pair on `cfg.eval_tasks`.
pub fn transfer(cfg: &RunConfig, dir: Option<&RunDir>) -> Result<(RunOutcome, Vec<TaskScore>)> {
    if cfg.eval_tasks.is_empty() {
        return Err(Error::config("eval_tasks: transfer needs at least one task"));
    }
    let orch = Orchestrator::new(cfg.clone())?;
    let out = train(cfg, dir)?;
    let tasks = cfg.transfer_tasks(orch.shapes())?;
    let scores = orch.transfer(&out.builder, &out.model, &tasks)?;
    if let Some(d) = dir {
        let mut csv = String::from("task,success_rate\n");
        for s in &scores {
            let _ = writeln!(csv, "{},{}", s.task, s.success_rate);
        }
        std::fs::write(d.path().join("transfer.csv"), csv).map_err(|e| Error::io(d.path(), e))?;
        d.write_summary(&summary(cfg, &out, scores.clone()))?;
    }
    Ok((out, scores))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedScore {
    pub label: String,
    pub seed: u64,
    pub success_rate: f64,
}

/// Final score of `cfg` with each method/seed pair; no files are written.
pub fn scores(cfg: &RunConfig, methods: &[Method], seeds: &[u64]) -> Result<Vec<SeedScore>> {
    let mut out = Vec::new();
    for &method in methods {
        for &seed in seeds {
            let run = super::run_abig(&RunConfig { method, seed, ..cfg.clone() })?;
            out.push(SeedScore { label: method.name().into(), seed, success_rate: run.final_score() });
        }
    }
    Ok(out)
}

/// ABIG final score per vocabulary size and seed.
pub fn sweep_vocab(cfg: &RunConfig, values: &[usize], seeds: &[u64]) -> Result<Vec<SeedScore>> {
    let mut out = Vec::new();
    for &v in values {
        for &seed in seeds {
            let run = super::run_abig(&RunConfig { vocab_size: v, seed, ..cfg.clone() })?;
            out.push(SeedScore { label: v.to_string(), seed, success_rate: run.final_score() });
        }
    }
    Ok(out)
}

/// Per-label aggregates in first-seen order.
pub fn aggregate_by_label(rows: &[SeedScore]) -> Vec<(String, Aggregate)> {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    labels
        .into_iter()
        .map(|l| {
            let xs: Vec<f64> = rows.iter().filter(|r| r.label == l).map(|r| r.success_rate).collect();
            (l.to_string(), Aggregate::of(&xs))
        })
        .collect()
}

pub fn scores_csv(key: &str, rows: &[SeedScore]) -> String {
    let mut csv = format!("{key},seed,success_rate\n");
    for r in rows {
        let _ = writeln!(csv, "{},{},{}", r.label, r.seed, r.success_rate);
    }
    csv
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyCell {
    pub condition: ToyCondition,
    pub method: ToyMethod,
    pub seeds: usize,
    pub wins: usize,
    pub converged: usize,
}

/// Win counts over seeds `0..seeds` for every condition/method pair.
pub fn toy_grid(conditions: &[ToyCondition], methods: &[ToyMethod], seeds: usize, cfg: &ToyConfig) -> Vec<ToyCell> {
    let mut out = Vec::new();
    for &condition in conditions {
        for &method in methods {
            let runs: Vec<_> = (0..seeds as u64).map(|s| run_toy(condition, method, s, cfg)).collect();
            out.push(ToyCell {
                condition,
                method,
                seeds,
                wins: runs.iter().filter(|r| r.win).count(),
                converged: runs.iter().filter(|r| r.converged).count(),
            });
        }
    }
    out
}

pub fn toy_csv(cells: &[ToyCell]) -> String {
    let mut csv = String::from("condition,method,seeds,wins,converged\n");
    for c in cells {
        let _ = writeln!(csv, "{},{},{},{},{}", c.condition, c.method, c.seeds, c.wins, c.converged);
    }
    csv
}
