//! Versioned checkpoint container: parameters, tokenizer vocabulary, role
//! tag, and the config hash of the experiment that produced it.

use crate::engine::model::{EngineError, Model, ModelConfig};
use crate::engine::tokenizer::Tokenizer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Role of a checkpoint in the self-training loop. Transitions follow the
/// algorithm: base → sft (warm-up / retraining), sft → dpo (DPO step), and
/// reference is a frozen copy of an sft checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Base,
    Sft,
    Dpo,
    Reference,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Role::Base => "base",
            Role::Sft => "sft",
            Role::Dpo => "dpo",
            Role::Reference => "reference",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub role: Role,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    role: Role,
    config_hash: String,
    model_config: ModelConfig,
    vocab: Vec<String>,
    params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(model: Model, role: Role, config_hash: impl Into<String>) -> Checkpoint {
        Checkpoint {
            model,
            role,
            config_hash: config_hash.into(),
        }
    }

    /// Same parameters, new role. Used for the frozen DPO reference and for
    /// role transitions after training.
    pub fn with_role(&self, role: Role) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            role,
            config_hash: self.config_hash.clone(),
        }
    }

    /// SHA-256 over the little-endian parameter bytes; used by the
    /// retrain-from-base audit.
    pub fn param_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.model.params {
            hasher.update(p.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn save(&self, tokenizer: &Tokenizer, path: impl AsRef<Path>) -> Result<(), EngineError> {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            role: self.role,
            config_hash: self.config_hash.clone(),
            model_config: self.model.cfg.clone(),
            vocab: tokenizer.vocab(),
            params: self.model.params.clone(),
        };
        let json = serde_json::to_string(&file)
            .map_err(|e| EngineError::Checkpoint(format!("serialize: {e}")))?;
        fs::write(path.as_ref(), json)
            .map_err(|e| EngineError::Checkpoint(format!("{}: {e}", path.as_ref().display())))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Checkpoint, Tokenizer), EngineError> {
        let data = fs::read_to_string(path.as_ref())
            .map_err(|e| EngineError::Checkpoint(format!("{}: {e}", path.as_ref().display())))?;
        let file: CheckpointFile = serde_json::from_str(&data)
            .map_err(|e| EngineError::Checkpoint(format!("parse: {e}")))?;
        if file.version != CHECKPOINT_VERSION {
            return Err(EngineError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        let tokenizer = Tokenizer::from_vocab(&file.vocab).map_err(EngineError::Checkpoint)?;
        if tokenizer.vocab_size() != file.model_config.vocab_size {
            return Err(EngineError::Checkpoint(format!(
                "vocabulary size {} does not match model config {}",
                tokenizer.vocab_size(),
                file.model_config.vocab_size
            )));
        }
        let expected: usize = {
            let m = Model::init(file.model_config.clone(), 0);
            m.param_count()
        };
        if file.params.len() != expected {
            return Err(EngineError::Checkpoint(format!(
                "parameter count {} does not match config ({expected})",
                file.params.len()
            )));
        }
        if !file.params.iter().all(|p| p.is_finite()) {
            return Err(EngineError::Checkpoint("non-finite parameters".into()));
        }
        Ok((
            Checkpoint {
                model: Model {
                    cfg: file.model_config,
                    params: file.params,
                },
                role: file.role,
                config_hash: file.config_hash,
            },
            tokenizer,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::model::ModelConfig;

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let tok = Tokenizer::standard();
        let model = Model::init(ModelConfig::toy(tok.vocab_size()), 99);
        let ckpt = Checkpoint::new(model, Role::Base, "deadbeef");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        ckpt.save(&tok, &path).unwrap();
        let (back, tok2) = Checkpoint::load(&path).unwrap();
        assert_eq!(ckpt, back);
        assert_eq!(tok.vocab(), tok2.vocab());
        assert_eq!(ckpt.param_hash(), back.param_hash());
    }

    #[test]
    fn param_hash_distinguishes_models() {
        let tok = Tokenizer::standard();
        let a = Checkpoint::new(Model::init(ModelConfig::toy(tok.vocab_size()), 1), Role::Base, "");
        let b = Checkpoint::new(Model::init(ModelConfig::toy(tok.vocab_size()), 2), Role::Base, "");
        assert_ne!(a.param_hash(), b.param_hash());
    }
}
