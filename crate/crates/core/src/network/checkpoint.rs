//! JSON checkpoints: `{format_version, norm_p, input_dim, layers: [...]}` with
//! every number written to 17 significant digits.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{Layer, Network};
use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Norm};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct CheckpointOut {
    format_version: u32,
    norm_p: Norm,
    input_dim: usize,
    layers: Vec<LayerOut>,
}

#[derive(Serialize)]
struct LayerOut {
    rows: usize,
    cols: usize,
    activation: Option<&'static str>,
    weight: Vec<Box<RawValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<Box<RawValue>>>,
}

#[derive(Deserialize)]
struct CheckpointIn {
    format_version: u32,
    norm_p: Norm,
    input_dim: usize,
    layers: Vec<LayerIn>,
}

#[derive(Deserialize)]
struct LayerIn {
    rows: usize,
    cols: usize,
    activation: Option<String>,
    weight: Vec<f64>,
    #[serde(default)]
    bias: Option<Vec<f64>>,
}

fn raw(v: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{v:.16e}")).expect("finite float is valid JSON")
}

impl Network {
    pub fn to_checkpoint_json(&self) -> String {
        let doc = CheckpointOut {
            format_version: CHECKPOINT_FORMAT_VERSION,
            norm_p: self.norm_p,
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| LayerOut {
                    rows: l.weight.rows(),
                    cols: l.weight.cols(),
                    activation: l.activation.map(Activation::id),
                    weight: l.weight.as_slice().iter().copied().map(raw).collect(),
                    bias: l.bias.as_ref().map(|b| b.iter().copied().map(raw).collect()),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("checkpoint serialization")
    }

    /// Parse a checkpoint; every failure is reported as [`Error::Checkpoint`].
    pub fn from_checkpoint_json(text: &str) -> Result<Network> {
        let bad = |m: String| Error::Checkpoint(m);
        let doc: CheckpointIn = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if doc.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version {}", doc.format_version)));
        }
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (i, l) in doc.layers.into_iter().enumerate() {
            if l.rows == 0 || l.cols == 0 {
                return Err(bad(format!("layer {i} has an empty weight")));
            }
            let weight =
                Matrix::new(l.rows, l.cols, l.weight).map_err(|e| bad(format!("layer {i}: {e}")))?;
            let activation = l
                .activation
                .map(|s| s.parse::<Activation>())
                .transpose()
                .map_err(|e| bad(format!("layer {i}: {e}")))?;
            layers.push(Layer::new(weight, activation, l.bias));
        }
        Network::new(doc.input_dim, layers, doc.norm_p).map_err(|e| bad(e.to_string()))
    }
}

pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    fs::write(path, net.to_checkpoint_json())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Network> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    Network::from_checkpoint_json(&text)
}
