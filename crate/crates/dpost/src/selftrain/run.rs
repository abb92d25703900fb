//! The iterative loop: warm-up, then per iteration an optional DPO step, the
//! SFT step (pseudo-label, filter, union), and a retrain that always starts
//! from the original base checkpoint.

use crate::corpus::Dataset;
use crate::engine::checkpoint::Checkpoint;
use crate::engine::generate::stream_seed;
use crate::engine::tokenizer::Tokenizer;
use crate::evalsuite::{accuracy, pass_at_k, ComputeLedger};
use crate::selftrain::steps::{dpo_step, sft_step, warmup};
use crate::selftrain::store::ExperimentStore;
use crate::selftrain::{build_preference_data, LoopConfig, Mode, SelfTrainError};
use crate::training::{DpoConfig, TrainProfile};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// What to measure after each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSpec {
    /// K values for Pass@K on the dev set (accuracy is always measured)
    pub pass_k: Vec<usize>,
    pub pass_k_temperature: f64,
    pub max_new_tokens: usize,
    pub eval_on_test: bool,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec {
            pass_k: vec![],
            pass_k_temperature: 0.7,
            max_new_tokens: 300,
            eval_on_test: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassAtKSummary {
    pub k: usize,
    pub temperature: f64,
    pub rate: f64,
}

/// Per-iteration metrics; iteration 0 is the warm-up stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub mode: Mode,
    pub config_hash: String,
    pub dev_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub pass_at_k: Vec<PassAtKSummary>,
    /// |D|: preference pairs used by the DPO step
    pub preference_pairs: usize,
    /// DPO step skipped because no pairs could be built
    pub dpo_degraded: bool,
    /// |S| and |S^alpha|
    pub pseudo_total: usize,
    pub pseudo_kept: usize,
    pub train_set_size: usize,
    pub sft_final_loss: Option<f64>,
    pub dpo_final_loss: Option<f64>,
    /// hash of the parameters the iteration's SFT training started from;
    /// must equal `base_param_hash` (retrain-from-base rule)
    pub init_param_hash: String,
    pub base_param_hash: String,
    pub train_tokens: u64,
    pub infer_tokens: u64,
    pub training_flops: f64,
    pub inference_flops: f64,
    pub total_flops: f64,
    pub wall_secs: f64,
}

pub struct LoopInputs<'a> {
    pub base: &'a Checkpoint,
    pub labeled: &'a Dataset,
    pub unlabeled: &'a Dataset,
    pub dev: &'a Dataset,
    pub test: Option<&'a Dataset>,
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub reports: Vec<IterationReport>,
    pub final_checkpoint: Checkpoint,
    pub ledger: ComputeLedger,
}

struct EvalResult {
    dev_accuracy: f64,
    test_accuracy: Option<f64>,
    pass_at_k: Vec<PassAtKSummary>,
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    ckpt: &Checkpoint,
    tokenizer: &Tokenizer,
    inputs: &LoopInputs,
    cfg: &LoopConfig,
    eval: &EvalSpec,
    seed: u64,
    iteration: usize,
    ledger: &mut ComputeLedger,
) -> EvalResult {
    let dev = accuracy(
        &ckpt.model,
        tokenizer,
        inputs.dev,
        cfg.calculator_enabled,
        eval.max_new_tokens,
        cfg.lane_batch,
    );
    ledger.add_infer_tokens(dev.tokens_processed);
    let test_accuracy = match (eval.eval_on_test, inputs.test) {
        (true, Some(test)) => {
            let out = accuracy(
                &ckpt.model,
                tokenizer,
                test,
                cfg.calculator_enabled,
                eval.max_new_tokens,
                cfg.lane_batch,
            );
            ledger.add_infer_tokens(out.tokens_processed);
            Some(out.accuracy)
        }
        _ => None,
    };
    let mut summaries = Vec::new();
    for &k in &eval.pass_k {
        let (report, tokens) = pass_at_k(
            &ckpt.model,
            tokenizer,
            inputs.dev,
            k,
            eval.pass_k_temperature,
            stream_seed(seed, 900 + iteration as u64),
            cfg.calculator_enabled,
            eval.max_new_tokens,
            cfg.lane_batch,
        );
        ledger.add_infer_tokens(tokens);
        summaries.push(PassAtKSummary {
            k,
            temperature: report.temperature,
            rate: report.rate,
        });
    }
    EvalResult {
        dev_accuracy: dev.accuracy,
        test_accuracy,
        pass_at_k: summaries,
    }
}

/// Run warm-up plus `cfg.max_iterations` iterations (or fewer if dev
/// accuracy converges). Retraining always restarts from `inputs.base`.
#[allow(clippy::too_many_arguments)]
pub fn run_loop(
    inputs: &LoopInputs,
    cfg: &LoopConfig,
    sft_profile: &TrainProfile,
    dpo: &DpoConfig,
    eval: &EvalSpec,
    seed: u64,
    tokenizer: &Tokenizer,
    mut store: Option<&mut ExperimentStore>,
) -> Result<LoopOutcome, SelfTrainError> {
    cfg.validate()?;
    let mut ledger = ComputeLedger::new(inputs.base.model.param_count() as u64);
    let base_hash = inputs.base.param_hash();
    let mut reports: Vec<IterationReport> = Vec::new();

    if let Some(s) = store.as_deref_mut() {
        s.save_checkpoint_root("base", inputs.base, tokenizer)?;
    }

    // warm-up stage (iteration 0)
    let t0 = Instant::now();
    let (mut current, warm_run) = warmup(
        inputs.base,
        inputs.labeled,
        sft_profile,
        stream_seed(seed, 3000),
        tokenizer,
        &mut ledger,
    )?;
    let ev = evaluate(&current, tokenizer, inputs, cfg, eval, seed, 0, &mut ledger);
    let report0 = IterationReport {
        iteration: 0,
        mode: cfg.mode,
        config_hash: inputs.base.config_hash.clone(),
        dev_accuracy: ev.dev_accuracy,
        test_accuracy: ev.test_accuracy,
        pass_at_k: ev.pass_at_k,
        preference_pairs: 0,
        dpo_degraded: false,
        pseudo_total: 0,
        pseudo_kept: 0,
        train_set_size: inputs.labeled.len(),
        sft_final_loss: warm_run.final_loss(),
        dpo_final_loss: None,
        init_param_hash: base_hash.clone(),
        base_param_hash: base_hash.clone(),
        train_tokens: ledger.train_tokens,
        infer_tokens: ledger.infer_tokens,
        training_flops: ledger.training_flops(),
        inference_flops: ledger.inference_flops(),
        total_flops: ledger.total_flops(),
        wall_secs: t0.elapsed().as_secs_f64(),
    };
    if let Some(s) = store.as_deref_mut() {
        s.save_iteration_checkpoint(0, "sft", &current, tokenizer)?;
        s.save_curve(0, "sft_loss", &warm_run.curve)?;
        s.save_report(0, &report0)?;
    }
    reports.push(report0);

    let mut labeled_pool = inputs.labeled.clone();
    for iteration in 1..=cfg.max_iterations {
        let t = Instant::now();
        let mut preference_pairs = 0usize;
        let mut dpo_degraded = false;
        let mut dpo_final_loss = None;

        // DPO step (dpo-st mode only)
        let generator = if cfg.mode == Mode::DpoSt {
            let pairs = build_preference_data(
                &current,
                tokenizer,
                inputs.unlabeled,
                cfg,
                stream_seed(seed, 1000 + iteration as u64),
                &mut ledger,
            );
            preference_pairs = pairs.len();
            if pairs.is_empty() {
                // degrade to plain self-training for this iteration
                dpo_degraded = true;
                current.clone()
            } else {
                let (dpo_ckpt, dpo_run) = dpo_step(
                    &current,
                    &pairs,
                    dpo,
                    stream_seed(seed, 4000 + iteration as u64),
                    tokenizer,
                    &mut ledger,
                )?;
                dpo_final_loss = dpo_run.final_loss();
                if let Some(s) = store.as_deref_mut() {
                    s.save_pairs(iteration, &pairs)?;
                    s.save_iteration_checkpoint(iteration, "dpo", &dpo_ckpt, tokenizer)?;
                    s.save_curve(iteration, "dpo_loss", &dpo_run.curve)?;
                }
                dpo_ckpt
            }
        } else {
            current.clone()
        };

        // SFT step: pseudo-label, filter, union
        let out = sft_step(
            &generator,
            inputs.unlabeled,
            &labeled_pool,
            cfg,
            stream_seed(seed, 2000 + iteration as u64),
            tokenizer,
            &mut ledger,
        )?;
        labeled_pool = out.train_set;

        // retrain from the original base model
        let init_param_hash = inputs.base.param_hash();
        let (next, sft_run) = warmup(
            inputs.base,
            &labeled_pool,
            sft_profile,
            stream_seed(seed, 3000 + iteration as u64),
            tokenizer,
            &mut ledger,
        )?;
        current = next;

        let ev = evaluate(
            &current, tokenizer, inputs, cfg, eval, seed, iteration, &mut ledger,
        );
        let report = IterationReport {
            iteration,
            mode: cfg.mode,
            config_hash: inputs.base.config_hash.clone(),
            dev_accuracy: ev.dev_accuracy,
            test_accuracy: ev.test_accuracy,
            pass_at_k: ev.pass_at_k,
            preference_pairs,
            dpo_degraded,
            pseudo_total: out.pseudo.len(),
            pseudo_kept: out.filtered.len(),
            train_set_size: labeled_pool.len(),
            sft_final_loss: sft_run.final_loss(),
            dpo_final_loss,
            init_param_hash,
            base_param_hash: base_hash.clone(),
            train_tokens: ledger.train_tokens,
            infer_tokens: ledger.infer_tokens,
            training_flops: ledger.training_flops(),
            inference_flops: ledger.inference_flops(),
            total_flops: ledger.total_flops(),
            wall_secs: t.elapsed().as_secs_f64(),
        };
        if let Some(s) = store.as_deref_mut() {
            s.save_dataset(iteration, "pseudo", &out.pseudo)?;
            s.save_dataset(iteration, "filtered", &out.filtered)?;
            s.save_iteration_checkpoint(iteration, "sft", &current, tokenizer)?;
            s.save_curve(iteration, "sft_loss", &sft_run.curve)?;
            s.save_report(iteration, &report)?;
        }
        reports.push(report);

        // convergence rule: stop when dev accuracy fails to improve
        let prev = reports[reports.len() - 2].dev_accuracy;
        let gained = reports.last().unwrap().dev_accuracy - prev;
        if gained <= cfg.convergence_min_gain && iteration < cfg.max_iterations {
            break;
        }
    }

    if let Some(s) = store.as_deref_mut() {
        s.save_all_reports(&reports)?;
    }
    Ok(LoopOutcome {
        reports,
        final_checkpoint: current,
        ledger,
    })
}
