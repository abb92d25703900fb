//! Loss functions (SFT and DPO), the AdamW/cosine trainer, gradient
//! checking, and schedule profiles.

pub mod gradcheck;
pub mod loss;
pub mod optimizer;
pub mod profile;

pub use loss::{
    dpo_loss, dpo_loss_grad, dpo_pair_loss, pair_logprobs, sft_loss, sft_loss_grad, softplus,
    SftExample, TokenizedPair, TrainError,
};
pub use optimizer::{
    clip_global_norm, lr_at, optimize, write_curve_csv, CurvePoint, Objective, TrainRun,
};
pub use profile::{Schedule, TrainProfile};

use crate::engine::model::Model;

/// DPO configuration: β and the optimization schedule.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DpoConfig {
    pub beta: f64,
    pub profile: TrainProfile,
}

impl DpoConfig {
    pub fn toy() -> DpoConfig {
        DpoConfig {
            beta: 0.1,
            profile: TrainProfile::toy_dpo(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.beta <= 0.0 {
            return Err(format!("beta must be positive, got {}", self.beta));
        }
        self.profile.validate()
    }
}

/// SFT objective over owned examples.
pub struct SftObjective {
    pub examples: Vec<SftExample>,
}

impl Objective for SftObjective {
    fn len(&self) -> usize {
        self.examples.len()
    }

    fn loss_grad(
        &self,
        model: &Model,
        idx: &[usize],
    ) -> Result<(f64, Vec<f64>, u64), TrainError> {
        let batch: Vec<&SftExample> = idx.iter().map(|&i| &self.examples[i]).collect();
        sft_loss_grad(model, &batch)
    }
}

/// DPO objective with reference log-probs precomputed once (the reference is
/// frozen, so they are constants of the optimization).
pub struct DpoObjective {
    pub pairs: Vec<TokenizedPair>,
    pub beta: f64,
    ref_logps: Vec<(f64, f64)>,
    /// tokens the reference forward consumed during precompute
    pub reference_tokens: u64,
}

impl DpoObjective {
    pub fn new(reference: &Model, pairs: Vec<TokenizedPair>, beta: f64) -> Result<Self, TrainError> {
        let refs: Vec<&TokenizedPair> = pairs.iter().collect();
        let (ref_logps, reference_tokens) = pair_logprobs(reference, &refs)?;
        Ok(DpoObjective {
            pairs,
            beta,
            ref_logps,
            reference_tokens,
        })
    }
}

impl Objective for DpoObjective {
    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn loss_grad(
        &self,
        model: &Model,
        idx: &[usize],
    ) -> Result<(f64, Vec<f64>, u64), TrainError> {
        let batch: Vec<&TokenizedPair> = idx.iter().map(|&i| &self.pairs[i]).collect();
        let refs: Vec<(f64, f64)> = idx.iter().map(|&i| self.ref_logps[i]).collect();
        dpo_loss_grad(model, &batch, &refs, self.beta)
    }
}
