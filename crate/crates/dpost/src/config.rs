//! Declarative experiment configuration (versioned TOML). Every artifact
//! embeds the hash of the resolved config so reruns can be matched to their
//! outputs exactly.

use crate::engine::model::ModelConfig;
use crate::selftrain::{EvalSpec, LoopConfig};
use crate::training::{DpoConfig, TrainProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

/// Where the unlabeled pool U comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnlabeledSource {
    /// U = train problems beyond the labeled prefix, rationales removed
    /// (disjoint semi-supervised split).
    Rest,
    /// U = every train question with rationales removed (the source setup,
    /// which reuses the labeled questions).
    AllTrain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    /// how many train problems keep their gold rationales (the labeled set L)
    pub labeled: usize,
    pub min_steps: usize,
    pub max_steps: usize,
    pub unlabeled: UnlabeledSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub context: usize,
}

impl ModelSpec {
    pub fn to_model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            n_layers: self.layers,
            d_model: self.d_model,
            n_heads: self.n_heads,
            d_ff: self.d_ff,
            context: self.context,
            vocab_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub sft: TrainProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    /// output root; overridden by the DPOST_HOME environment variable
    pub root: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    pub name: String,
    pub corpus: CorpusSpec,
    pub model: ModelSpec,
    pub profiles: Profiles,
    pub dpo: DpoConfig,
    #[serde(rename = "loop")]
    pub loop_cfg: LoopConfig,
    pub eval: EvalSpec,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    /// Desk-scale defaults.
    pub fn toy() -> ExperimentConfig {
        ExperimentConfig {
            version: CONFIG_VERSION,
            seed: 42,
            name: "exp".into(),
            corpus: CorpusSpec {
                train: 2000,
                dev: 200,
                test: 500,
                labeled: 600,
                min_steps: 1,
                max_steps: 3,
                unlabeled: UnlabeledSource::Rest,
            },
            model: ModelSpec {
                layers: 2,
                d_model: 64,
                n_heads: 4,
                d_ff: 256,
                context: 512,
            },
            profiles: Profiles {
                sft: TrainProfile::toy_sft(),
            },
            dpo: DpoConfig::toy(),
            loop_cfg: LoopConfig::default(),
            eval: EvalSpec {
                pass_k: vec![],
                pass_k_temperature: 0.7,
                max_new_tokens: 300,
                eval_on_test: true,
            },
            output: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.version != CONFIG_VERSION {
            return Err(format!(
                "unsupported config version {} (this build reads version {CONFIG_VERSION})",
                self.version
            ));
        }
        let c = &self.corpus;
        if c.train == 0 || c.dev == 0 || c.test == 0 {
            return Err("corpus split sizes must be positive".into());
        }
        if c.labeled == 0 || c.labeled > c.train {
            return Err(format!(
                "labeled count {} must lie in 1..={}",
                c.labeled, c.train
            ));
        }
        if !(1..=5).contains(&c.min_steps)
            || !(1..=5).contains(&c.max_steps)
            || c.min_steps > c.max_steps
        {
            return Err("corpus step range must lie within 1..=5".into());
        }
        if self.model.d_model % self.model.n_heads != 0 {
            return Err("d_model must be divisible by n_heads".into());
        }
        self.profiles.sft.validate().map_err(|e| format!("profiles.sft: {e}"))?;
        self.dpo.validate().map_err(|e| format!("dpo: {e}"))?;
        self.loop_cfg.validate().map_err(|e| e.to_string())?;
        for &k in &self.eval.pass_k {
            if k == 0 {
                return Err("eval.pass_k entries must be >= 1".into());
            }
        }
        if self.name.is_empty() || self.name.contains(std::path::MAIN_SEPARATOR) {
            return Err("name must be a non-empty path component".into());
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex::encode(hasher.finalize())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig, String> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| format!("{}: {e}", path.as_ref().display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_toml())
    }
}
