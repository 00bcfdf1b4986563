use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::architect::MctsConfig;
use crate::error::{Error, Result};
use crate::math::TrainConfig;
use crate::toy::ToyConfig;
use crate::world::{GridConfig, ShapeLibrary, TaskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Modelling and guiding frames, intent-driven messages.
    Abig,
    /// Random messages during training; exact builder model at evaluation.
    NoIntent,
    /// Uniform-random builder, never trained.
    Random,
    /// Fixed randomly initialized softmax builder.
    Stochastic,
    /// Fixed randomly initialized argmax builder.
    Deterministic,
    /// ABIG with a task drawn per guided episode from the training set.
    AllGoals,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Abig, Method::NoIntent, Method::Random, Method::Stochastic, Method::Deterministic, Method::AllGoals];

    pub fn name(self) -> &'static str {
        match self {
            Method::Abig => "abig",
            Method::NoIntent => "no-intent",
            Method::Random => "random",
            Method::Stochastic => "stochastic",
            Method::Deterministic => "deterministic",
            Method::AllGoals => "all-goals",
        }
    }

    /// Methods whose builder is trained by self-imitation.
    pub fn trains(self) -> bool {
        matches!(self, Method::Abig | Method::NoIntent | Method::AllGoals)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown method '{s}'")))
    }
}

/// Everything needed to reproduce one run. Defaults are the paper-scale
/// 3-block values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub method: Method,
    /// Training (and default evaluation) task, e.g. `place` or `shape:l-shape`.
    pub task: String,
    /// Tasks for transfer evaluation.
    pub eval_tasks: Vec<String>,
    /// Vocabulary sizes for a sweep.
    pub vocab_values: Vec<usize>,
    /// Extra shape definitions; the built-in library is used otherwise.
    pub shapes_file: Option<std::path::PathBuf>,
    pub grid: GridConfig,
    pub vocab_size: usize,
    pub n_iterations: usize,
    /// Split evenly between modelling and guiding frames.
    pub episodes_per_iteration: usize,
    pub builder_hidden: Vec<usize>,
    pub architect_hidden: Vec<usize>,
    /// Softmax temperature of the builder while collecting data.
    pub collect_temperature: f64,
    pub architect_bc: TrainConfig,
    pub builder_bc: TrainConfig,
    pub mcts: MctsConfig,
    pub eval_episodes: usize,
    pub eval_len: usize,
    /// Trained builders act by argmax during evaluation; off samples at
    /// `collect_temperature` as in training.
    pub eval_greedy: bool,
    pub measurement_size: usize,
    pub workers: usize,
    /// Write measured wall time into `metrics.csv`; off keeps the file
    /// reproducible byte for byte.
    pub record_wall_time: bool,
    pub checkpoints: bool,
    pub toy: ToyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            method: Method::Abig,
            task: "place".into(),
            eval_tasks: Vec::new(),
            vocab_values: Vec::new(),
            shapes_file: None,
            grid: GridConfig::default(),
            vocab_size: 18,
            n_iterations: 40,
            episodes_per_iteration: 600,
            builder_hidden: vec![126, 126],
            architect_hidden: vec![126, 126],
            collect_temperature: 1.0,
            architect_bc: TrainConfig::architect(),
            builder_bc: TrainConfig::builder(),
            mcts: MctsConfig::default(),
            eval_episodes: 100,
            eval_len: 40,
            eval_greedy: true,
            measurement_size: 6000,
            workers: 1,
            record_wall_time: false,
            checkpoints: true,
            toy: ToyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.vocab_size < 2 {
            return Err(Error::config("vocab_size: must be at least 2"));
        }
        if self.episodes_per_iteration == 0 || !self.episodes_per_iteration.is_multiple_of(2) {
            return Err(Error::config("episodes_per_iteration: must be a positive even number"));
        }
        if self.builder_hidden.is_empty() || self.architect_hidden.is_empty() {
            return Err(Error::config("hidden layers: at least one is required"));
        }
        if !(self.collect_temperature > 0.0 && self.collect_temperature.is_finite()) {
            return Err(Error::config("collect_temperature: must be positive"));
        }
        if self.eval_len == 0 {
            return Err(Error::config("eval_len: must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers: must be at least 1"));
        }
        if let Some(&v) = self.vocab_values.iter().find(|&&v| v < 2) {
            return Err(Error::config(format!("vocab_values: {v} is below 2")));
        }
        self.architect_bc.validate().map_err(|e| prefix("architect_bc", e))?;
        self.builder_bc.validate().map_err(|e| prefix("builder_bc", e))?;
        self.mcts.validate().map_err(|e| prefix("mcts", e))?;
        let shapes = self.shapes()?;
        for t in self.training_tasks(&shapes)?.iter().chain(&self.transfer_tasks(&shapes)?) {
            t.validate(&self.grid)?;
        }
        Ok(())
    }

    pub fn shapes(&self) -> Result<ShapeLibrary> {
        match &self.shapes_file {
            Some(p) => ShapeLibrary::load(p),
            None => Ok(ShapeLibrary::builtin()),
        }
    }

    pub fn task_spec(&self, shapes: &ShapeLibrary) -> Result<TaskSpec> {
        TaskSpec::parse(&self.task, shapes)
    }

    /// Tasks guided episodes are drawn from.
    pub fn training_tasks(&self, shapes: &ShapeLibrary) -> Result<Vec<TaskSpec>> {
        Ok(match self.method {
            Method::AllGoals => TaskSpec::training_set(),
            _ => vec![self.task_spec(shapes)?],
        })
    }

    /// Transfer tasks; every built-in shape is expanded from `shapes`.
    pub fn transfer_tasks(&self, shapes: &ShapeLibrary) -> Result<Vec<TaskSpec>> {
        let mut out = Vec::new();
        for name in &self.eval_tasks {
            if name == "shapes" {
                for s in shapes.names() {
                    out.push(TaskSpec::parse(&format!("shape:{s}"), shapes)?);
                }
            } else {
                out.push(TaskSpec::parse(name, shapes)?);
            }
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

fn prefix(field: &str, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("{field}: {msg}")),
        other => other,
    }
}

/// Recursively overlays `top` onto `base`.
pub fn merge_tables(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge_tables(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_table(text: &str, what: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| Error::parse(what, e.message()))
}

/// Builds a validated config from defaults overlaid by each document in
/// order. Errors name the offending field path.
pub fn config_from_layers(layers: &[(&str, &str)]) -> Result<RunConfig> {
    let mut table = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
    for (what, text) in layers {
        let mut t = parse_table(text, what)?;
        t.remove("preset");
        merge_tables(&mut table, t);
    }
    let cfg: RunConfig = toml::Table::try_into(table).map_err(|e| Error::parse("run config", e.message()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    config_from_layers(&[(&path.display().to_string(), &text)])
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_toml()).map_err(|e| Error::io(path, e))
}
