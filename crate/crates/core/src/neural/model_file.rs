//! Human-readable JSON model files.
//!
//! Parameters are written as decimal literals with 17 significant digits,
//! which is enough for every `f64` to reload bit-exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, Layer, Network, TrainConfig};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "srcnum-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    #[serde(with = "precise")]
    weights: Vec<f64>,
    #[serde(with = "precise")]
    bias: Vec<f64>,
}

/// On-disk model: layers, the training configuration used, and free-form
/// string metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    layers: Vec<LayerRecord>,
}

impl ModelFile {
    pub fn new(net: &Network, train_config: Option<TrainConfig>, meta: BTreeMap<String, String>) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            train_config,
            meta,
            layers: net
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    activation: l.activation,
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn network(&self) -> Result<Network> {
        let layers = self
            .layers
            .iter()
            .map(|r| Layer::new(r.inputs, r.outputs, r.weights.clone(), r.bias.clone(), r.activation))
            .collect::<Result<Vec<_>>>()?;
        Network::new(layers)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Parse(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        file.network()?;
        Ok(file)
    }
}

pub fn write_model(path: impl AsRef<Path>, model: &ModelFile) -> Result<()> {
    fs::write(path, model.to_json()? + "\n")?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    ModelFile::from_json(&fs::read_to_string(path)?)
}

mod precise {
    use serde::de::Deserializer;
    use serde::ser::{Error as _, Serializer};
    use serde::Deserialize;
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let raw = values
            .iter()
            .map(|v| {
                if !v.is_finite() {
                    return Err(S::Error::custom(format!("non-finite parameter {v}")));
                }
                RawValue::from_string(format!("{v:.16e}")).map_err(S::Error::custom)
            })
            .collect::<Result<Vec<Box<RawValue>>, S::Error>>()?;
        s.collect_seq(raw)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<f64>::deserialize(d)
    }
}
