use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, QgModel};
use super::train::TrainConfig;
use super::vocab::Vocabulary;
use super::QgError;
use crate::numerics::{ParamStore, WireParams, CHECKPOINT_VERSION};

/// Everything needed to rebuild a trained model: hyperparameters,
/// vocabulary and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub vocab: Vec<String>,
    pub params: WireParams,
}

impl Checkpoint {
    pub fn new(model: &QgModel, store: &ParamStore, train: &TrainConfig) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            model: model.config.clone(),
            train: train.clone(),
            vocab: model.vocab.tokens().to_vec(),
            params: store.to_wire(),
        }
    }

    pub fn restore(&self) -> Result<(QgModel, ParamStore), QgError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(QgError::Checkpoint(format!("unsupported version {}", self.version)));
        }
        let model = QgModel::new(self.model.clone(), Vocabulary::from_tokens(self.vocab.clone()));
        let store = ParamStore::from_wire(&self.params)?;
        let expected = model.fresh_params(0);
        for (name, t) in expected.iter() {
            match store.get(name) {
                Some(s) if s.shape() == t.shape() => {}
                Some(s) => return Err(QgError::Checkpoint(format!("{name}: shape {:?}, expected {:?}", s.shape(), t.shape()))),
                None => return Err(QgError::Checkpoint(format!("missing parameter {name}"))),
            }
        }
        Ok((model, store))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, QgError> {
        serde_json::from_str(s).map_err(|e| QgError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), QgError> {
        fs::write(path, self.to_json()).map_err(|e| QgError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, QgError> {
        let s = fs::read_to_string(path).map_err(|e| QgError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }
}
