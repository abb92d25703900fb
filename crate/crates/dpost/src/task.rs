//! Encoding of math word problems for the model, and batched rationale
//! sampling shared by the self-training loop and the evaluation suite.

use crate::calc::CalcInterceptor;
use crate::corpus::{Problem, Rationale};
use crate::engine::generate::{generate_batch, SamplingConfig};
use crate::engine::model::Model;
use crate::engine::tokenizer::{TokenId, Tokenizer, BOS, EOS};
use crate::training::SftExample;

/// Prompt layout: `<bos> question \n`; the rationale is the completion an
/// SFT example trains on (through `<eos>`).
pub fn question_prompt(tokenizer: &Tokenizer, question: &str) -> Vec<TokenId> {
    let mut toks = vec![BOS];
    toks.extend(tokenizer.encode(question));
    toks.push(tokenizer.id("\n").expect("newline token"));
    toks
}

pub fn rationale_completion(tokenizer: &Tokenizer, rationale_text: &str) -> Vec<TokenId> {
    let mut toks = tokenizer.encode(rationale_text);
    toks.push(EOS);
    toks
}

/// Build the SFT example for a labeled problem; `None` when it has no
/// rationale.
pub fn sft_example(tokenizer: &Tokenizer, problem: &Problem) -> Option<SftExample> {
    let rationale = problem.gold_rationale.as_ref()?;
    Some(SftExample {
        prompt: question_prompt(tokenizer, &problem.question),
        completion: rationale_completion(tokenizer, &rationale.text),
    })
}

pub fn sft_examples(tokenizer: &Tokenizer, problems: &[&Problem]) -> Vec<SftExample> {
    problems
        .iter()
        .filter_map(|p| sft_example(tokenizer, p))
        .collect()
}

fn fnv1a64(data: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Stable per-sequence stream id: independent of batch composition and
/// sampling order, distinct per (phase, question, sample index).
pub fn sample_stream_id(phase: &str, problem_id: &str, sample_idx: usize) -> u64 {
    fnv1a64(format!("{phase}|{problem_id}").as_bytes()).wrapping_add(sample_idx as u64)
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    /// `rationales[i][j]` is sample j for `problems[i]`.
    pub rationales: Vec<Vec<Rationale>>,
    pub tokens_processed: u64,
    pub forced_spans: usize,
    pub malformed_annotations: usize,
}

/// Sample `samples_per_question` rationales for every problem, decoding in
/// lane batches of `lane_batch`. Per-lane seeding makes the output
/// independent of the batching.
pub fn sample_rationales(
    model: &Model,
    tokenizer: &Tokenizer,
    problems: &[&Problem],
    samples_per_question: usize,
    phase: &str,
    scfg: &SamplingConfig,
    lane_batch: usize,
) -> SampleRun {
    assert!(lane_batch > 0);
    let jobs: Vec<(usize, usize)> = (0..problems.len())
        .flat_map(|pi| (0..samples_per_question).map(move |si| (pi, si)))
        .collect();
    let mut rationales: Vec<Vec<Rationale>> =
        vec![Vec::with_capacity(samples_per_question); problems.len()];
    let mut tokens = 0u64;
    let mut forced = 0usize;
    let mut malformed = 0usize;
    let mut interceptor = scfg
        .calculator_enabled
        .then(|| CalcInterceptor::new(tokenizer));

    for chunk in jobs.chunks(lane_batch) {
        let prompts: Vec<Vec<TokenId>> = chunk
            .iter()
            .map(|&(pi, _)| question_prompt(tokenizer, &problems[pi].question))
            .collect();
        let stream_ids: Vec<u64> = chunk
            .iter()
            .map(|&(pi, si)| sample_stream_id(phase, &problems[pi].id, si))
            .collect();
        let outputs = generate_batch(
            model,
            &prompts,
            scfg,
            &stream_ids,
            interceptor
                .as_mut()
                .map(|ic| ic as &mut dyn crate::engine::generate::Interceptor),
        );
        if let Some(ic) = &interceptor {
            forced += ic.forced_spans().len();
            malformed += ic.malformed_events().len();
        }
        for (&(pi, _), out) in chunk.iter().zip(&outputs) {
            tokens += out.tokens_processed as u64;
            rationales[pi].push(Rationale::parse(out.text(tokenizer)));
        }
    }

    SampleRun {
        rationales,
        tokens_processed: tokens,
        forced_spans: forced,
        malformed_annotations: malformed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_synthetic;
    use crate::engine::model::ModelConfig;

    #[test]
    fn prompt_and_completion_reconstruct_surface() {
        let tok = Tokenizer::standard();
        let ds = generate_synthetic(3, 5, 1..=2);
        for p in ds.problems() {
            let ex = sft_example(&tok, p).unwrap();
            let mut full = ex.prompt.clone();
            full.extend_from_slice(&ex.completion);
            let text = tok.decode(&full);
            let want = format!("{}\n{}", p.question, p.gold_rationale.as_ref().unwrap().text);
            assert_eq!(text, want);
        }
    }

    #[test]
    fn sampling_is_batch_size_invariant() {
        let tok = Tokenizer::standard();
        let model = Model::init(ModelConfig::toy(tok.vocab_size()), 5);
        let ds = generate_synthetic(4, 6, 1..=1);
        let problems: Vec<&Problem> = ds.problems().collect();
        let scfg = SamplingConfig {
            temperature: 0.8,
            max_new_tokens: 12,
            seed: 3,
            calculator_enabled: false,
            ignore_eos: false,
        };
        let a = sample_rationales(&model, &tok, &problems, 2, "t", &scfg, 3);
        let b = sample_rationales(&model, &tok, &problems, 2, "t", &scfg, 32);
        assert_eq!(a.rationales, b.rationales);
    }

    #[test]
    fn stream_ids_distinct_per_phase_and_sample() {
        let a = sample_stream_id("dpo", "p1", 0);
        let b = sample_stream_id("dpo", "p1", 1);
        let c = sample_stream_id("sft", "p1", 0);
        let d = sample_stream_id("dpo", "p2", 0);
        assert!(a != b && a != c && a != d);
    }
}
