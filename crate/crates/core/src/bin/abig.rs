use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use abig::metrics::{welch_t_test, MeasurementSet};
use abig::run::experiments::{self, Aggregate};
use abig::run::presets::{preset, presets};
use abig::run::rundir::{read_metrics, RunDir};
use abig::run::{config_from_layers, Method, Orchestrator, RunConfig};
use abig::seed::stream;
use abig::toy::{ToyCondition, ToyMethod};

#[derive(Parser)]
#[command(name = "abig", version, about = "Architect-builder iterated guiding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run config, layered over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    method: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a pair and log one metrics row per iteration.
    Train(RunArgs),
    /// Evaluate a saved pair from a run directory.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        iteration: Option<usize>,
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
    },
    /// Train on one task, then evaluate on the configured transfer tasks.
    Transfer(RunArgs),
    /// Toy problem win counts as CSV.
    Toy {
        #[arg(long, default_value = "all")]
        condition: String,
        #[arg(long, default_value = "all")]
        method: String,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
    },
    /// Fixed random, stochastic and deterministic builders.
    Baseline {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
    /// ABIG final score for several vocabulary sizes.
    SweepVocab {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated sizes; defaults to the config's `vocab_values`.
        #[arg(long, value_delimiter = ',')]
        values: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Recompute entropy and mutual information from saved checkpoints.
    Metrics {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "runs")]
        out_dir: PathBuf,
    },
    /// Shipped presets.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
    /// Welch's t-test between the final scores of two groups of runs.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    List,
    /// Print a preset's config file.
    Show { name: String },
}

fn resolve(args: &RunArgs) -> Result<RunConfig> {
    let mut layers: Vec<(String, String)> = Vec::new();
    if let Some(p) = &args.preset {
        let p = preset(p)?;
        layers.push((p.name.clone(), p.source.to_string()));
    }
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        layers.push((path.display().to_string(), text));
    }
    let mut flags = toml::Table::new();
    if let Some(s) = args.seed {
        flags.insert("seed".into(), toml::Value::Integer(i64::try_from(s).context("--seed too large")?));
    }
    if let Some(w) = args.workers {
        flags.insert("workers".into(), toml::Value::Integer(w as i64));
    }
    if let Some(t) = &args.task {
        flags.insert("task".into(), toml::Value::String(t.clone()));
    }
    if let Some(m) = &args.method {
        m.parse::<Method>()?;
        flags.insert("method".into(), toml::Value::String(m.clone()));
    }
    layers.push(("command line".into(), toml::to_string(&flags)?));
    let refs: Vec<(&str, &str)> = layers.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    Ok(config_from_layers(&refs)?)
}

fn label(cfg: &RunConfig, command: &str) -> String {
    format!("{command}-{}-{}-s{}", cfg.method, cfg.task.replace([':', '@', ','], "_"), cfg.seed)
}

fn print_aggregates(rows: &[experiments::SeedScore]) {
    for (label, agg) in experiments::aggregate_by_label(rows) {
        println!("{label}: {:.3} ± {:.3} (n={})", agg.mean, agg.err(), agg.n);
    }
}

fn write(dir: &RunDir, name: &str, content: &str) -> Result<()> {
    let path = dir.path().join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
}

fn json_summary(dir: &RunDir, value: serde_json::Value) -> Result<()> {
    write(dir, "summary.json", &serde_json::to_string_pretty(&value)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = resolve(&args)?;
            let dir = RunDir::create(&args.out_dir, &label(&cfg, "train"))?;
            let out = experiments::train(&cfg, Some(&dir))?;
            println!("{}", dir.path().display());
            println!("final success rate {:.3}", out.final_score());
        }
        Command::Transfer(args) => {
            let cfg = resolve(&args)?;
            let dir = RunDir::create(&args.out_dir, &label(&cfg, "transfer"))?;
            let (_, scores) = experiments::transfer(&cfg, Some(&dir))?;
            println!("{}", dir.path().display());
            for s in scores {
                println!("{}: {:.3}", s.task, s.success_rate);
            }
        }
        Command::Eval { run, iteration, task, episodes, out_dir } => {
            let src = RunDir::open(&run)?;
            let mut cfg = src.read_config()?;
            if let Some(t) = task {
                cfg.task = t;
            }
            if let Some(n) = episodes {
                cfg.eval_episodes = n;
            }
            let available = src.checkpoints()?;
            let iteration = match iteration {
                Some(i) => i,
                None => *available.last().context("run has no checkpoints")?,
            };
            let orch = Orchestrator::new(cfg.clone())?;
            let (builder, model) = src.load_pair(iteration, &cfg)?;
            let spec = cfg.task_spec(orch.shapes())?;
            let score = orch.evaluate(&builder, &model, &spec, &[stream::EVAL, iteration as u64])?;
            let dir = RunDir::create(&out_dir, &label(&cfg, "eval"))?;
            dir.write_config(&cfg)?;
            json_summary(&dir, serde_json::json!({
                "source_run": run, "iteration": iteration, "task": cfg.task,
                "episodes": cfg.eval_episodes, "success_rate": score,
                "provenance": abig::run::rundir::provenance(),
            }))?;
            println!("{}", dir.path().display());
            println!("{}: {score:.3}", cfg.task);
        }
        Command::Toy { condition, method, seeds, preset: p, out_dir } => {
            let toy_cfg = match p {
                Some(name) => preset(&name)?.config()?.toy,
                None => RunConfig::default().toy,
            };
            let conditions =
                if condition == "all" { ToyCondition::ALL.to_vec() } else { vec![condition.parse::<ToyCondition>()?] };
            let methods =
                if method == "all" { vec![ToyMethod::Abig, ToyMethod::NoIntent] } else { vec![method.parse::<ToyMethod>()?] };
            let cells = experiments::toy_grid(&conditions, &methods, seeds, &toy_cfg);
            let csv = experiments::toy_csv(&cells);
            let dir = RunDir::create(&out_dir, "toy")?;
            write(&dir, "toy.csv", &csv)?;
            json_summary(&dir, serde_json::json!({
                "cells": cells, "config": toy_cfg, "provenance": abig::run::rundir::provenance(),
            }))?;
            print!("{csv}");
        }
        Command::Baseline { run: args, seeds } => {
            let cfg = resolve(&args)?;
            let methods = match &args.method {
                Some(_) if cfg.method.trains() => bail!("baseline methods are random, stochastic and deterministic"),
                Some(_) => vec![cfg.method],
                None => vec![Method::Random, Method::Stochastic, Method::Deterministic],
            };
            let seed_list: Vec<u64> = (0..seeds).map(|s| cfg.seed + s).collect();
            let rows = experiments::scores(&cfg, &methods, &seed_list)?;
            let dir = RunDir::create(&args.out_dir, &format!("baseline-{}", cfg.task.replace([':', '@', ','], "_")))?;
            dir.write_config(&cfg)?;
            write(&dir, "baselines.csv", &experiments::scores_csv("method", &rows))?;
            let aggs: Vec<(String, Aggregate)> = experiments::aggregate_by_label(&rows);
            json_summary(&dir, serde_json::json!({ "aggregates": aggs, "provenance": abig::run::rundir::provenance() }))?;
            println!("{}", dir.path().display());
            print_aggregates(&rows);
        }
        Command::SweepVocab { run: args, values, seeds } => {
            let cfg = resolve(&args)?;
            let values = if values.is_empty() { cfg.vocab_values.clone() } else { values };
            if values.is_empty() {
                bail!("no vocabulary sizes given (use --values or vocab_values)");
            }
            let seed_list: Vec<u64> = (0..seeds).map(|s| cfg.seed + s).collect();
            let rows = experiments::sweep_vocab(&cfg, &values, &seed_list)?;
            let dir = RunDir::create(&args.out_dir, &format!("sweep-{}", cfg.task.replace([':', '@', ','], "_")))?;
            dir.write_config(&RunConfig { vocab_values: values, ..cfg })?;
            write(&dir, "sweep.csv", &experiments::scores_csv("vocab_size", &rows))?;
            let aggs = experiments::aggregate_by_label(&rows);
            json_summary(&dir, serde_json::json!({ "aggregates": aggs, "provenance": abig::run::rundir::provenance() }))?;
            println!("{}", dir.path().display());
            print_aggregates(&rows);
        }
        Command::Metrics { run, out_dir } => {
            let src = RunDir::open(&run)?;
            let cfg = src.read_config()?;
            let measurement = MeasurementSet::load(&src.measurement_path())?;
            let mut csv = String::from("iteration,mean_entropy,mi_messages,mi_states\n");
            for i in src.checkpoints()? {
                let (builder, _) = src.load_pair(i, &cfg)?;
                let r = measurement.report(&builder)?;
                csv.push_str(&format!("{i},{},{},{}\n", r.mean_entropy, r.mi_messages, r.mi_states));
            }
            let dir = RunDir::create(&out_dir, "metrics")?;
            write(&dir, "metrics_recomputed.csv", &csv)?;
            json_summary(&dir, serde_json::json!({ "source_run": run, "provenance": abig::run::rundir::provenance() }))?;
            print!("{csv}");
        }
        Command::Presets { action: PresetsAction::List } => {
            for p in presets() {
                println!("{:<18} {:<6} {:<12} {}", p.name, format!("{:?}", p.scale).to_lowercase(), p.command, p.description);
            }
        }
        Command::Presets { action: PresetsAction::Show { name } } => {
            print!("{}", preset(&name)?.source);
        }
        Command::Compare { a, b } => {
            let finals = |dirs: &[PathBuf]| -> Result<Vec<f64>> {
                dirs.iter()
                    .map(|d| {
                        let rows = read_metrics(&RunDir::open(d)?.metrics_path())?;
                        Ok(rows.last().context("empty metrics.csv")?.success_rate)
                    })
                    .collect()
            };
            let (xa, xb) = (finals(&a)?, finals(&b)?);
            let (ga, gb) = (Aggregate::of(&xa), Aggregate::of(&xb));
            let w = welch_t_test(&xa, &xb)?;
            println!("a: {:.3} ± {:.3} (n={})", ga.mean, ga.err(), ga.n);
            println!("b: {:.3} ± {:.3} (n={})", gb.mean, gb.err(), gb.n);
            println!("welch t = {:.4}, dof = {:.2}, p = {:.3e}", w.t, w.dof, w.p);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
