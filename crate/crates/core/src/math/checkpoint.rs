//! Network checkpoints.
//!
//! A checkpoint is two files sharing a stem:
//!
//! * `<stem>.bin`: for each layer in order, the weight matrix row-major
//!   (`outputs x inputs`) followed by the bias vector, every value an IEEE-754
//!   binary64 in little-endian byte order. No header, no padding.
//! * `<stem>.json`: metadata with `layer_dims`, `seed`, `context` and the
//!   `format` tag `"f64-le-row-major-v1"`.
//!
//! The blob length is therefore `8 * sum(inputs*outputs + outputs)` bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dense, PolicyNet};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "f64-le-row-major-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub layer_dims: Vec<usize>,
    pub seed: u64,
    /// Free-form provenance, e.g. `"builder iter 3"`.
    pub context: String,
    /// Extra key/value metadata (vocabulary size, grid shape, ...).
    #[serde(default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn encode(net: &PolicyNet) -> Vec<u8> {
    let mut out = Vec::with_capacity(net.parameter_count() * 8);
    for t in net.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], layer_dims: &[usize]) -> Result<PolicyNet> {
    let expected: usize = layer_dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum::<usize>() * 8;
    if bytes.len() != expected {
        return Err(Error::parse("checkpoint blob", format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut layers = Vec::new();
    for w in layer_dims.windows(2) {
        let mut layer = Dense::zeros(w[0], w[1]);
        for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            *v = values.next().expect("length checked above");
        }
        layers.push(layer);
    }
    PolicyNet::from_layers(layers)
}

pub fn save(net: &PolicyNet, stem: &Path, meta: &CheckpointMeta) -> Result<()> {
    if let Some(dir) = stem.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let bin = with_ext(stem, "bin");
    fs::write(&bin, encode(net)).map_err(|e| Error::io(&bin, e))?;
    let json = with_ext(stem, "json");
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::parse("checkpoint metadata", e))?;
    fs::write(&json, text).map_err(|e| Error::io(&json, e))
}

pub fn load(stem: &Path) -> Result<(PolicyNet, CheckpointMeta)> {
    let json = with_ext(stem, "json");
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text).map_err(|e| Error::parse("checkpoint metadata", e))?;
    if meta.format != FORMAT_TAG {
        return Err(Error::parse("checkpoint metadata", format!("unknown format {}", meta.format)));
    }
    let bin = with_ext(stem, "bin");
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    Ok((decode(&bytes, &meta.layer_dims)?, meta))
}

impl CheckpointMeta {
    pub fn for_net(net: &PolicyNet, seed: u64, context: impl Into<String>) -> Self {
        Self {
            format: FORMAT_TAG.to_string(),
            layer_dims: net.layer_dims(),
            seed,
            context: context.into(),
            extra: Default::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_layout_is_weights_then_bias() {
        let mut l = Dense::zeros(2, 1);
        l.weights = vec![1.5, -2.0];
        l.bias = vec![0.25];
        let net = PolicyNet::from_layers(vec![l]).unwrap();
        let bytes = encode(&net);
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[..8], &1.5f64.to_le_bytes());
        assert_eq!(&bytes[16..], &0.25f64.to_le_bytes());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let net = PolicyNet::new(&[5, 7, 3], 12).unwrap();
        let stem = dir.path().join("nested/net");
        save(&net, &stem, &CheckpointMeta::for_net(&net, 12, "unit test")).unwrap();
        let (back, meta) = load(&stem).unwrap();
        assert_eq!(back, net);
        assert_eq!(meta.layer_dims, vec![5, 7, 3]);
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let net = PolicyNet::new(&[2, 3, 2], 0).unwrap();
        let bytes = encode(&net);
        assert!(decode(&bytes[..bytes.len() - 8], &[2, 3, 2]).is_err());
    }
}
