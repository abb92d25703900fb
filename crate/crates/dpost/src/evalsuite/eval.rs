//! Accuracy and Pass@K over a problem set.

use crate::corpus::{numeric_equal, Dataset, Problem};
use crate::engine::generate::SamplingConfig;
use crate::engine::model::Model;
use crate::engine::tokenizer::Tokenizer;
use crate::task::sample_rationales;
use serde::{Deserialize, Serialize};

/// What one problem decoded to (kept for audits and reports).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub id: String,
    pub output: String,
    pub extracted: Option<f64>,
    pub gold: f64,
    pub correct: bool,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub accuracy: f64,
    pub transcripts: Vec<Transcript>,
    pub tokens_processed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassAtKReport {
    pub k: usize,
    pub temperature: f64,
    /// per-problem hit flags, in dataset order
    pub hits: Vec<bool>,
    pub rate: f64,
}

fn is_correct(rationale_answer: Option<f64>, gold: Option<f64>) -> bool {
    match (rationale_answer, gold) {
        (Some(a), Some(g)) => numeric_equal(a, g),
        _ => false,
    }
}

/// Greedy-decode every problem and score extracted answers against gold.
pub fn accuracy(
    model: &Model,
    tokenizer: &Tokenizer,
    testset: &Dataset,
    calculator_enabled: bool,
    max_new_tokens: usize,
    lane_batch: usize,
) -> EvalOutcome {
    let problems: Vec<&Problem> = testset.problems().collect();
    let scfg = SamplingConfig {
        temperature: 0.0,
        max_new_tokens,
        seed: 0,
        calculator_enabled,
        ignore_eos: false,
    };
    let run = sample_rationales(model, tokenizer, &problems, 1, "eval", &scfg, lane_batch);
    let mut transcripts = Vec::with_capacity(problems.len());
    let mut correct = 0usize;
    for (p, samples) in problems.iter().zip(&run.rationales) {
        let r = &samples[0];
        let gold = p.gold_answer_value();
        let ok = is_correct(r.answer, gold);
        if ok {
            correct += 1;
        }
        transcripts.push(Transcript {
            id: p.id.clone(),
            output: r.text.clone(),
            extracted: r.answer,
            gold: gold.unwrap_or(f64::NAN),
            correct: ok,
        });
    }
    EvalOutcome {
        accuracy: correct as f64 / problems.len().max(1) as f64,
        transcripts,
        tokens_processed: run.tokens_processed,
    }
}

/// Sample K rationales per problem at the given temperature; a problem is a
/// hit when at least one extracted answer matches gold. Pass@1 at
/// temperature 0 equals accuracy exactly (same decode path).
#[allow(clippy::too_many_arguments)]
pub fn pass_at_k(
    model: &Model,
    tokenizer: &Tokenizer,
    testset: &Dataset,
    k: usize,
    temperature: f64,
    seed: u64,
    calculator_enabled: bool,
    max_new_tokens: usize,
    lane_batch: usize,
) -> (PassAtKReport, u64) {
    assert!(k >= 1, "K must be at least 1");
    let problems: Vec<&Problem> = testset.problems().collect();
    let scfg = SamplingConfig {
        temperature,
        max_new_tokens,
        seed,
        calculator_enabled,
        ignore_eos: false,
    };
    let phase = if temperature == 0.0 { "eval" } else { "passk" };
    let run = sample_rationales(model, tokenizer, &problems, k, phase, &scfg, lane_batch);
    let hits: Vec<bool> = problems
        .iter()
        .zip(&run.rationales)
        .map(|(p, samples)| {
            let gold = p.gold_answer_value();
            samples.iter().any(|r| is_correct(r.answer, gold))
        })
        .collect();
    let rate = hits.iter().filter(|&&h| h).count() as f64 / hits.len().max(1) as f64;
    (
        PassAtKReport {
            k,
            temperature,
            hits,
            rate,
        },
        run.tokens_processed,
    )
}
