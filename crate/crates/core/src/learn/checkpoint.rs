use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::model::{Architecture, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    /// Row-major values.
    pub data: Vec<f64>,
}

/// On-disk form of [`ModelParams`]: shapes plus flat value arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub architecture: Architecture,
    pub row_normalize: bool,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn from_params(params: &ModelParams) -> Self {
        Checkpoint {
            architecture: params.architecture,
            row_normalize: params.row_normalize,
            input_dim: params.input_dim(),
            hidden_dim: params.hidden_dim(),
            num_classes: params.num_classes(),
            tensors: params
                .tensors()
                .into_iter()
                .map(|(name, t)| TensorRecord {
                    name,
                    shape: [t.nrows(), t.ncols()],
                    data: t.iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn into_params(self) -> Result<ModelParams> {
        let mut params = ModelParams::init(self.architecture, self.input_dim, self.hidden_dim, self.num_classes, 0)?;
        params.row_normalize = self.row_normalize;
        let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
        if names.len() != self.tensors.len() {
            return Err(Error::InvalidParameter(format!(
                "checkpoint has {} tensors, architecture needs {}",
                self.tensors.len(),
                names.len()
            )));
        }
        for ((slot, name), record) in params.tensors_mut().into_iter().zip(&names).zip(self.tensors) {
            if &record.name != name {
                return Err(Error::InvalidParameter(format!("expected tensor `{name}`, found `{}`", record.name)));
            }
            let shape = (record.shape[0], record.shape[1]);
            if shape != slot.dim() {
                return Err(Error::ShapeMismatch {
                    context: "checkpoint tensor",
                    expected: slot.dim(),
                    found: shape,
                });
            }
            *slot = Array2::from_shape_vec(shape, record.data).map_err(|e| Error::InvalidParameter(format!("{name}: {e}")))?;
        }
        Ok(params)
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&Checkpoint::from_params(params))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let checkpoint: Checkpoint = serde_json::from_str(&text)?;
    checkpoint.into_params()
}
