use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mnist::SplitOptions;
use crate::error::{Error, Result};
use crate::qnn::{QnnParams, PARAM_COUNT};
use crate::train::TrainConfig;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// On-disk model: the flat angle vector plus optional training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub param_count: usize,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
    /// Split the model was trained on, so evaluation can rebuild the test set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitOptions>,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

impl ModelFile {
    pub fn new(params: &QnnParams, train_config: Option<TrainConfig>) -> Self {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            param_count: PARAM_COUNT,
            params: params.to_flat(),
            train_config,
            split: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::SchemaVersion(probe.schema_version));
        }
        let file: ModelFile = serde_json::from_str(text)?;
        if file.param_count != PARAM_COUNT || file.params.len() != PARAM_COUNT {
            return Err(Error::Schema(format!(
                "model declares {} and holds {} parameters, expected {PARAM_COUNT}",
                file.param_count,
                file.params.len()
            )));
        }
        Ok(file)
    }

    pub fn params(&self) -> Result<QnnParams> {
        QnnParams::from_flat(&self.params)
    }
}

pub fn save_model(path: &Path, params: &QnnParams, train_config: Option<TrainConfig>) -> Result<()> {
    save_model_file(path, &ModelFile::new(params, train_config))
}

pub fn save_model_file(path: &Path, file: &ModelFile) -> Result<()> {
    fs::write(path, file.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<QnnParams> {
    load_model_file(path)?.params()
}

pub fn load_model_file(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_json(&text)
}
