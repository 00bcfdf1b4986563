//! Shipped experiment presets. Each is a TOML run config with a `[preset]`
//! header table describing it.

use serde::Deserialize;

use super::{config_from_layers, RunConfig};
use crate::error::{Error, Result};

macro_rules! preset_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../presets/", $name, ".toml")))),*]
    };
}

const FILES: &[(&str, &str)] = preset_files![
    "paper-grasp",
    "paper-place",
    "paper-h-line",
    "paper-v-line",
    "paper-transfer",
    "paper-all-goals",
    "paper-shapes",
    "paper-baselines",
    "paper-vocab-sweep",
    "paper-toy",
    "desk-grasp",
    "desk-place",
    "desk-transfer",
    "desk-baselines",
    "desk-vocab-sweep",
    "desk-toy",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Paper,
    Desk,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    name: String,
    scale: Scale,
    command: String,
    description: String,
    artifacts: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub scale: Scale,
    /// Subcommand the preset is meant for.
    pub command: String,
    pub description: String,
    pub artifacts: Vec<String>,
    pub source: &'static str,
}

impl Preset {
    pub fn config(&self) -> Result<RunConfig> {
        config_from_layers(&[(&self.name, self.source)])
    }
}

fn parse(file: &str, source: &'static str) -> Result<Preset> {
    #[derive(Deserialize)]
    struct Doc {
        preset: Header,
    }
    let doc: Doc = toml::from_str::<toml::Table>(source)
        .map_err(|e| Error::parse(file, e.message()))?
        .try_into()
        .map_err(|e: toml::de::Error| Error::parse(file, e.message()))?;
    let h = doc.preset;
    if h.name != file {
        return Err(Error::parse(file, format!("preset header names '{}'", h.name)));
    }
    Ok(Preset { name: h.name, scale: h.scale, command: h.command, description: h.description, artifacts: h.artifacts, source })
}

pub fn presets() -> Vec<Preset> {
    FILES.iter().map(|(name, src)| parse(name, src).expect("shipped presets parse")).collect()
}

pub fn preset(name: &str) -> Result<Preset> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::config(format!("unknown preset '{name}' (see `abig presets list`)")))
}
