//! Versioned on-disk form of a trained regressor.
//!
//! The file is a single JSON object:
//!
//! ```text
//! {
//!   "format": "j4reg-model",
//!   "version": 1,
//!   "layer_dims": [n, h1, ..., p],
//!   "weights": [[...], ...],      // per layer, row-major out × in
//!   "biases": [[...], ...],       // per layer
//!   "head": [w_1, ..., w_p],
//!   "reference": { "x0": [...], "z0": z0 },
//!   "standardizer": null | { "mean": [...], "scale": [...] },
//!   "feature_names": [...],
//!   "target": "name"
//! }
//! ```
//!
//! Prediction for raw input `x`: standardize (if present), subtract `x0`,
//! run the network, dot with `head`, add `z0`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ReferencePoint, Standardizer};
use crate::error::{check_dim, Error, Result};
use crate::linmap::{LinearHead, MlpNetwork};

pub const MODEL_FORMAT: &str = "j4reg-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub head: Vec<f64>,
    pub reference: ReferencePoint,
    pub standardizer: Option<Standardizer>,
    pub feature_names: Vec<String>,
    pub target: String,
}

/// A loaded, validated model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: MlpNetwork,
    pub head: LinearHead,
    pub reference: ReferencePoint,
    pub standardizer: Option<Standardizer>,
    pub feature_names: Vec<String>,
    pub target: String,
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let input = match &self.standardizer {
            Some(s) => s.transform_row(x)?,
            None => x.to_vec(),
        };
        crate::linmap::predict(&self.network, &self.head, &self.reference, &input)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            layer_dims: self.network.layer_dims().to_vec(),
            weights: self.network.weights().to_vec(),
            biases: self.network.biases().to_vec(),
            head: self.head.w.clone(),
            reference: self.reference.clone(),
            standardizer: self.standardizer.clone(),
            feature_names: self.feature_names.clone(),
            target: self.target.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!(
                "unexpected format tag '{}'",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (this build reads {MODEL_VERSION})",
                file.version
            )));
        }
        let network = MlpNetwork::from_parameters(file.layer_dims, file.weights, file.biases)?;
        check_dim(network.output_dim(), file.head.len())?;
        check_dim(network.input_dim(), file.reference.x0.len())?;
        check_dim(network.input_dim(), file.feature_names.len())?;
        if let Some(s) = &file.standardizer {
            check_dim(network.input_dim(), s.mean.len())?;
            check_dim(network.input_dim(), s.scale.len())?;
        }
        Ok(Self {
            network,
            head: LinearHead {
                w: file.head,
                train_mse: f64::NAN,
                train_r2: f64::NAN,
            },
            reference: file.reference,
            standardizer: file.standardizer,
            feature_names: file.feature_names,
            target: file.target,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())
            .map_err(|e| Error::Model(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::Model(e.to_string()))?;
        Self::from_file(file)
    }
}
