//! On-disk layout of one run:
//!
//! ```text
//! <root>/config.echo          resolved config (TOML)
//! <root>/metrics.csv          one row per iteration
//! <root>/timings.csv          measured wall time per iteration
//! <root>/summary.json         written once, at the end
//! <root>/measurement_set.bin
//! <root>/checkpoints/iter_0003/{builder,model}.{bin,json}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{IterationRecord, Method, RunConfig, TaskScore};
use crate::architect::BuilderModel;
use crate::builder::{ActionSelection, BuilderAgent};
use crate::error::{Error, Result};
use crate::math::checkpoint::{self, CheckpointMeta};
use crate::metrics::MeasurementSet;

pub const METRICS_HEADER: &str =
    "iteration,success_rate,mean_entropy,mi_messages,mi_states,builder_bc_val_acc,architect_bc_val_acc,wall_time_s";

/// A `metrics.csv` row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    pub success_rate: f64,
    pub mean_entropy: f64,
    pub mi_messages: f64,
    pub mi_states: f64,
    pub builder_bc_val_acc: f64,
    pub architect_bc_val_acc: f64,
    pub wall_time_s: f64,
}

impl MetricsRow {
    /// Wall time is NaN unless requested, so reruns stay byte-identical.
    pub fn from_record(r: &IterationRecord, record_wall_time: bool) -> Self {
        Self {
            iteration: r.iteration,
            success_rate: r.success_rate,
            mean_entropy: r.mean_entropy,
            mi_messages: r.mi_messages,
            mi_states: r.mi_states,
            builder_bc_val_acc: r.builder_bc_val_acc,
            architect_bc_val_acc: r.architect_bc_val_acc,
            wall_time_s: if record_wall_time { r.wall_time_s } else { f64::NAN },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub provenance: String,
    pub method: Method,
    pub task: String,
    pub seed: u64,
    pub iterations: usize,
    pub final_success_rate: f64,
    pub final_mean_entropy: f64,
    pub final_mi_messages: f64,
    pub final_mi_states: f64,
    pub total_wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transfer: Vec<TaskScore>,
    pub config: RunConfig,
}

/// Crate version plus the source revision when run inside a git checkout.
pub fn provenance() -> String {
    let rev = std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    format!("abig {} ({})", env!("CARGO_PKG_VERSION"), rev.as_deref().unwrap_or("unversioned"))
}

#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl RunDir {
    /// Creates `<out_dir>/<label>-<timestamp>`, adding a counter on clashes.
    pub fn create(out_dir: &Path, label: &str) -> Result<Self> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
        for k in 0.. {
            let name = if k == 0 { format!("{label}-{stamp}") } else { format!("{label}-{stamp}-{k}") };
            let root = out_dir.join(name);
            match fs::create_dir(&root) {
                Ok(()) => return Ok(Self { root }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(Error::io(&root, e)),
            }
        }
        unreachable!()
    }

    pub fn open(root: &Path) -> Result<Self> {
        if !root.join("config.echo").is_file() {
            return Err(Error::config(format!("{} is not a run directory", root.display())));
        }
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn summary_path(&self) -> PathBuf {
        self.root.join("summary.json")
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.echo")
    }

    pub fn measurement_path(&self) -> PathBuf {
        self.root.join("measurement_set.bin")
    }

    pub fn checkpoint_dir(&self, iteration: usize) -> PathBuf {
        self.root.join("checkpoints").join(format!("iter_{iteration:04}"))
    }

    pub fn write_config(&self, cfg: &RunConfig) -> Result<()> {
        write_atomic(&self.config_path(), cfg.to_toml().as_bytes())
    }

    pub fn read_config(&self) -> Result<RunConfig> {
        super::load_config(&self.config_path())
    }

    pub fn write_measurement(&self, m: &MeasurementSet) -> Result<()> {
        m.save(&self.measurement_path())
    }

    pub fn write_summary(&self, s: &Summary) -> Result<()> {
        let json = serde_json::to_vec_pretty(s).map_err(|e| Error::parse("summary", e))?;
        write_atomic(&self.summary_path(), &json)
    }

    pub fn read_summary(&self) -> Result<Summary> {
        let path = self.summary_path();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse("summary", e))
    }

    /// Rewrites `metrics.csv` from `rows`; used after every iteration so
    /// the file on disk is always complete up to the last finished row.
    pub fn write_metrics(&self, rows: &[MetricsRow]) -> Result<()> {
        write_atomic(&self.metrics_path(), &metrics_csv(rows)?)
    }

    pub fn write_timings(&self, records: &[IterationRecord]) -> Result<()> {
        let mut out = String::from("iteration,wall_time_s\n");
        for r in records {
            out.push_str(&format!("{},{}\n", r.iteration, r.wall_time_s));
        }
        write_atomic(&self.root.join("timings.csv"), out.as_bytes())
    }

    pub fn save_checkpoint(&self, iteration: usize, seed: u64, builder: &BuilderAgent, model: &BuilderModel) -> Result<()> {
        let dir = self.checkpoint_dir(iteration);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        if let Some(net) = builder.net() {
            checkpoint::save(net, &dir.join("builder"), &CheckpointMeta::for_net(net, seed, format!("builder iter {iteration}")))?;
        }
        if let (crate::architect::Provenance::Learned, Some(net)) = (model.provenance, model.agent.net()) {
            checkpoint::save(net, &dir.join("model"), &CheckpointMeta::for_net(net, seed, format!("model iter {iteration}")))?;
        }
        Ok(())
    }

    /// Iterations with a saved builder network, ascending.
    pub fn checkpoints(&self) -> Result<Vec<usize>> {
        let dir = self.root.join("checkpoints");
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let name = entry.file_name();
            if let Some(i) = name.to_str().and_then(|n| n.strip_prefix("iter_")).and_then(|n| n.parse().ok()) {
                if entry.path().join("builder.json").is_file() {
                    out.push(i);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Restores the pair saved at `iteration`. Without a learned model
    /// checkpoint the exact model of the builder is used.
    pub fn load_pair(&self, iteration: usize, cfg: &RunConfig) -> Result<(BuilderAgent, BuilderModel)> {
        let dir = self.checkpoint_dir(iteration);
        let collect = ActionSelection::Sample { temperature: cfg.collect_temperature };
        let builder = match cfg.method {
            Method::Random => BuilderAgent::uniform(&cfg.grid, cfg.vocab_size),
            m => {
                let selection = if m.trains() { collect } else { super::eval_selection(cfg) };
                let (net, _) = checkpoint::load(&dir.join("builder"))?;
                BuilderAgent::with_net(net, &cfg.grid, cfg.vocab_size, selection)?
            }
        };
        let model_stem = dir.join("model");
        let model = if model_stem.with_extension("json").is_file() {
            let (net, _) = checkpoint::load(&model_stem)?;
            BuilderModel::learned(net, &cfg.grid, cfg.vocab_size)?
        } else {
            BuilderModel::exact(&builder, super::eval_selection(cfg))
        };
        Ok((builder, model))
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(METRICS_HEADER.split(','))
            .map_err(|e| Error::parse("metrics", e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::parse("metrics", e))?;
    }
    w.into_inner().map_err(|e| Error::parse("metrics", e.to_string()))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse("metrics", e))?;
    let header = r.headers().map_err(|e| Error::parse("metrics", e))?.iter().collect::<Vec<_>>().join(",");
    if header != METRICS_HEADER {
        return Err(Error::parse("metrics", format!("unexpected header '{header}'")));
    }
    r.deserialize().map(|row| row.map_err(|e| Error::parse("metrics", e))).collect()
}
