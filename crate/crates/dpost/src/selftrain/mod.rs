//! Self-training orchestration: the classic loop (pseudo-label, filter,
//! union, retrain from base) and its DPO-augmented variant that tunes the
//! pseudo-label generator with preference pairs before each SFT step.

pub mod pairs;
pub mod run;
pub mod steps;
pub mod store;

pub use pairs::{build_preference_data, pairs_from_samples, PreferencePair};
pub use run::{run_loop, EvalSpec, IterationReport, LoopInputs, LoopOutcome, PassAtKSummary};
pub use steps::{dpo_step, sft_step, warmup, SftStepOutput};
pub use store::{ExperimentStore, Manifest};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelfTrainError {
    #[error("labeled dataset is empty or has no rationales")]
    EmptyLabeled,
    #[error("no preference pairs could be built")]
    EmptyPreferenceData,
    #[error("checkpoint role {got} not allowed here (expected {expected})")]
    RoleMismatch { expected: &'static str, got: String },
    #[error("invalid loop config: {0}")]
    Config(String),
    #[error(transparent)]
    Train(#[from] crate::training::TrainError),
    #[error(transparent)]
    Engine(#[from] crate::engine::model::EngineError),
    #[error("store error: {0}")]
    Store(#[from] std::io::Error),
}

/// Which algorithm the loop runs: plain self-training or DPO-augmented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    St,
    DpoSt,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::St => "st",
            Mode::DpoSt => "dpo-st",
        })
    }
}

/// Knobs of the iterative process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub mode: Mode,
    pub max_iterations: usize,
    pub dpo_samples_per_question: usize,
    pub sft_samples_per_question: usize,
    pub temperature: f64,
    pub dedup_threshold: f64,
    pub calculator_enabled: bool,
    pub max_new_tokens: usize,
    /// stop early when dev accuracy improves by no more than this (fraction;
    /// 0.001 = 0.1 points)
    pub convergence_min_gain: f64,
    /// decode lanes per generation batch
    pub lane_batch: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            mode: Mode::DpoSt,
            max_iterations: 3,
            dpo_samples_per_question: 5,
            sft_samples_per_question: 3,
            temperature: 0.7,
            dedup_threshold: 0.7,
            calculator_enabled: true,
            max_new_tokens: 300,
            convergence_min_gain: 0.001,
            lane_batch: 32,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), SelfTrainError> {
        if self.dpo_samples_per_question < 2 {
            return Err(SelfTrainError::Config(
                "dpo_samples_per_question must be at least 2".into(),
            ));
        }
        if self.sft_samples_per_question < 1 {
            return Err(SelfTrainError::Config(
                "sft_samples_per_question must be at least 1".into(),
            ));
        }
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold <= 1.0) {
            return Err(SelfTrainError::Config(format!(
                "dedup_threshold {} outside (0, 1]",
                self.dedup_threshold
            )));
        }
        if self.temperature < 0.0 {
            return Err(SelfTrainError::Config("temperature must be >= 0".into()));
        }
        if self.lane_batch == 0 {
            return Err(SelfTrainError::Config("lane_batch must be positive".into()));
        }
        Ok(())
    }
}
