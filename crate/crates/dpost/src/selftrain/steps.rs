//! The three trainable phases of the loop: warm-up, DPO step, SFT step.

use crate::corpus::{Dataset, DatasetItem, DatasetKind, Problem, Rationale};
use crate::engine::checkpoint::{Checkpoint, Role};
use crate::engine::generate::SamplingConfig;
use crate::engine::tokenizer::Tokenizer;
use crate::evalsuite::ComputeLedger;
use crate::selftrain::{LoopConfig, PreferencePair, SelfTrainError};
use crate::task::{question_prompt, rationale_completion, sample_rationales, sft_examples};
use crate::training::{
    optimize, DpoConfig, DpoObjective, SftObjective, TokenizedPair, TrainProfile, TrainRun,
};

fn require_role(ckpt: &Checkpoint, allowed: &[Role], expected: &'static str) -> Result<(), SelfTrainError> {
    if allowed.contains(&ckpt.role) {
        Ok(())
    } else {
        Err(SelfTrainError::RoleMismatch {
            expected,
            got: ckpt.role.to_string(),
        })
    }
}

/// Warm-up stage: fine-tune the base model on the labeled data, yielding the
/// initial SFT model.
pub fn warmup(
    base: &Checkpoint,
    labeled: &Dataset,
    profile: &TrainProfile,
    seed: u64,
    tokenizer: &Tokenizer,
    ledger: &mut ComputeLedger,
) -> Result<(Checkpoint, TrainRun), SelfTrainError> {
    require_role(base, &[Role::Base], "base")?;
    let problems: Vec<&Problem> = labeled.problems().collect();
    let examples = sft_examples(tokenizer, &problems);
    if examples.is_empty() {
        return Err(SelfTrainError::EmptyLabeled);
    }
    let objective = SftObjective { examples };
    let run = optimize(&base.model, &objective, profile, seed)?;
    ledger.add_train_tokens(run.tokens_processed);
    let ckpt = Checkpoint::new(run.model.clone(), Role::Sft, base.config_hash.clone());
    Ok((ckpt, run))
}

fn tokenize_pair(tokenizer: &Tokenizer, pair: &PreferencePair) -> TokenizedPair {
    TokenizedPair {
        prompt: question_prompt(tokenizer, &pair.question),
        winning: rationale_completion(tokenizer, &pair.winning.text),
        losing: rationale_completion(tokenizer, &pair.losing.text),
    }
}

/// DPO step: tune the SFT model on the preference pairs against a frozen
/// reference copy of itself.
pub fn dpo_step(
    sft: &Checkpoint,
    pairs: &[PreferencePair],
    dpo: &DpoConfig,
    seed: u64,
    tokenizer: &Tokenizer,
    ledger: &mut ComputeLedger,
) -> Result<(Checkpoint, TrainRun), SelfTrainError> {
    require_role(sft, &[Role::Sft], "sft")?;
    if pairs.is_empty() {
        return Err(SelfTrainError::EmptyPreferenceData);
    }
    dpo.validate().map_err(SelfTrainError::Config)?;
    let reference = sft.with_role(Role::Reference);
    let tokenized: Vec<TokenizedPair> = pairs.iter().map(|p| tokenize_pair(tokenizer, p)).collect();
    let objective = DpoObjective::new(&reference.model, tokenized, dpo.beta)?;
    // the reference forward passes are inference: no gradients flow into them
    ledger.add_infer_tokens(objective.reference_tokens);
    let run = optimize(&sft.model, &objective, &dpo.profile, seed)?;
    ledger.add_train_tokens(run.tokens_processed);
    debug_assert_eq!(reference.model.params, sft.model.params);
    let ckpt = Checkpoint::new(run.model.clone(), Role::Dpo, sft.config_hash.clone());
    Ok((ckpt, run))
}

/// Output of one SFT step: the raw pseudo-labels S, the filtered subset
/// S^alpha, and the next training set L ∪ S^alpha.
#[derive(Debug, Clone)]
pub struct SftStepOutput {
    pub pseudo: Dataset,
    pub filtered: Dataset,
    pub train_set: Dataset,
}

/// SFT step: sample K rationales per unlabeled question from the generator
/// (the DPO model in dpo-st mode, the SFT model in st mode), keep the
/// answer-correct, annotation-valid, deduplicated ones, and union them with
/// the labeled pool.
pub fn sft_step(
    generator: &Checkpoint,
    questions: &Dataset,
    labeled: &Dataset,
    cfg: &LoopConfig,
    seed: u64,
    tokenizer: &Tokenizer,
    ledger: &mut ComputeLedger,
) -> Result<SftStepOutput, SelfTrainError> {
    require_role(generator, &[Role::Sft, Role::Dpo], "sft or dpo")?;
    cfg.validate()?;
    let problems: Vec<&Problem> = questions.problems().collect();
    let scfg = SamplingConfig {
        temperature: cfg.temperature,
        max_new_tokens: cfg.max_new_tokens,
        seed,
        calculator_enabled: cfg.calculator_enabled,
        ignore_eos: false,
    };
    let run = sample_rationales(
        &generator.model,
        tokenizer,
        &problems,
        cfg.sft_samples_per_question,
        "sft-data",
        &scfg,
        cfg.lane_batch,
    );
    ledger.add_infer_tokens(run.tokens_processed);

    let source = format!("{}-generated", generator.role);
    let mut pseudo_items = Vec::new();
    let mut filtered_items = Vec::new();
    for (p, samples) in problems.iter().zip(&run.rationales) {
        let gold = p.gold_answer_value();
        for (si, r) in samples.iter().enumerate() {
            pseudo_items.push(DatasetItem {
                problem: Problem {
                    id: format!("{}#s{si}", p.id),
                    question: p.question.clone(),
                    gold_rationale: Some(r.clone()),
                    gold_answer: p.gold_answer.clone(),
                },
                source: Some(source.clone()),
            });
        }
        // answer-correct and annotation-valid, then per-question dedup
        let correct: Vec<(usize, &Rationale)> = samples
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                r.answer
                    .zip(gold)
                    .is_some_and(|(a, g)| crate::corpus::numeric_equal(a, g))
                    && r.annotations_valid()
            })
            .collect();
        let kept = crate::corpus::deduplicate(
            correct.iter().map(|(_, r)| (*r).clone()).collect(),
            cfg.dedup_threshold,
        );
        // map each kept rationale back to the sample it came from, so the
        // filtered set is a literal subset of the pseudo set
        let mut used = vec![false; correct.len()];
        for r in kept {
            let (si, _) = correct
                .iter()
                .zip(used.iter_mut())
                .find_map(|(&(si, cr), u)| {
                    (!*u && cr.text == r.text).then(|| {
                        *u = true;
                        (si, cr)
                    })
                })
                .expect("kept rationale originates from the correct set");
            filtered_items.push(DatasetItem {
                problem: Problem {
                    id: format!("{}#s{si}", p.id),
                    question: p.question.clone(),
                    gold_rationale: Some(r),
                    gold_answer: p.gold_answer.clone(),
                },
                source: Some(source.clone()),
            });
        }
    }
    let pseudo = Dataset::new(DatasetKind::Pseudo, pseudo_items);
    let filtered = Dataset::new(DatasetKind::Filtered, filtered_items);

    // L ← S^alpha ∪ L with exact (question, rationale) duplicates collapsed
    let mut seen: std::collections::HashSet<(String, String)> = labeled
        .items
        .iter()
        .map(|it| {
            (
                it.problem.question.clone(),
                it.problem
                    .gold_rationale
                    .as_ref()
                    .map(|r| r.text.clone())
                    .unwrap_or_default(),
            )
        })
        .collect();
    let mut train_items = labeled.items.clone();
    for item in &filtered.items {
        let key = (
            item.problem.question.clone(),
            item.problem
                .gold_rationale
                .as_ref()
                .map(|r| r.text.clone())
                .unwrap_or_default(),
        );
        if seen.insert(key) {
            train_items.push(item.clone());
        }
    }
    let train_set = Dataset::new(DatasetKind::Labeled, train_items);

    Ok(SftStepOutput {
        pseudo,
        filtered,
        train_set,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_synthetic;
    use crate::engine::model::{Model, ModelConfig};

    fn micro_setup() -> (Checkpoint, Tokenizer, Dataset) {
        let tok = Tokenizer::standard();
        let model = Model::init(
            ModelConfig {
                n_layers: 1,
                d_model: 32,
                n_heads: 2,
                d_ff: 64,
                context: 256,
                vocab_size: tok.vocab_size(),
            },
            7,
        );
        let base = Checkpoint::new(model, Role::Base, "h");
        let labeled = generate_synthetic(11, 12, 1..=1);
        (base, tok, labeled)
    }

    fn quick_profile() -> TrainProfile {
        TrainProfile {
            batch_size: 6,
            epochs: Some(1),
            max_steps: None,
            learning_rate: 1e-3,
            warmup_ratio: 0.1,
            weight_decay: 0.01,
            grad_clip: 1.0,
            schedule: Default::default(),
        }
    }

    #[test]
    fn warmup_requires_labeled_data() {
        let (base, tok, labeled) = micro_setup();
        let mut ledger = ComputeLedger::new(base.model.param_count() as u64);
        let empty = labeled.strip_rationales();
        assert!(matches!(
            warmup(&base, &empty, &quick_profile(), 1, &tok, &mut ledger),
            Err(SelfTrainError::EmptyLabeled)
        ));
    }

    #[test]
    fn warmup_is_deterministic_and_tagged() {
        let (base, tok, labeled) = micro_setup();
        let mut ledger = ComputeLedger::new(0);
        let (a, _) = warmup(&base, &labeled, &quick_profile(), 5, &tok, &mut ledger).unwrap();
        let (b, _) = warmup(&base, &labeled, &quick_profile(), 5, &tok, &mut ledger).unwrap();
        assert_eq!(a.model.params, b.model.params);
        assert_eq!(a.role, Role::Sft);
        assert!(ledger.train_tokens > 0);
    }

    #[test]
    fn warmup_rejects_non_base() {
        let (base, tok, labeled) = micro_setup();
        let sft = base.with_role(Role::Sft);
        let mut ledger = ComputeLedger::new(0);
        assert!(matches!(
            warmup(&sft, &labeled, &quick_profile(), 1, &tok, &mut ledger),
            Err(SelfTrainError::RoleMismatch { .. })
        ));
    }

    #[test]
    fn dpo_step_empty_pairs_is_an_error() {
        let (base, tok, _) = micro_setup();
        let sft = base.with_role(Role::Sft);
        let mut ledger = ComputeLedger::new(0);
        assert!(matches!(
            dpo_step(&sft, &[], &DpoConfig::toy(), 1, &tok, &mut ledger),
            Err(SelfTrainError::EmptyPreferenceData)
        ));
    }

    #[test]
    fn dpo_step_zero_steps_returns_input_parameters() {
        let (base, tok, _) = micro_setup();
        let sft = base.with_role(Role::Sft);
        let pair = PreferencePair {
            problem_id: "p".into(),
            question: "dana has 3 coins then gets 4 more how many".into(),
            winning: Rationale::parse("now 3+4=<<3+4=7>>7\n#### 7"),
            losing: Rationale::parse("now 3*4=<<3*4=12>>12\n#### 12"),
        };
        let mut dpo = DpoConfig::toy();
        dpo.profile.max_steps = Some(0);
        let mut ledger = ComputeLedger::new(0);
        let (out, _) = dpo_step(&sft, &[pair], &dpo, 1, &tok, &mut ledger).unwrap();
        assert_eq!(out.model.params, sft.model.params);
        assert_eq!(out.role, Role::Dpo);
    }

    #[test]
    fn dpo_training_loss_drops_below_ln2() {
        let (base, tok, _) = micro_setup();
        let sft = base.with_role(Role::Sft);
        let mk = |w: &str, l: &str, q: &str| PreferencePair {
            problem_id: q.into(),
            question: format!("{q} has 3 coins then gets 4 more how many"),
            winning: Rationale::parse(w),
            losing: Rationale::parse(l),
        };
        let pairs: Vec<PreferencePair> = vec![
            mk("now 3+4=<<3+4=7>>7\n#### 7", "so 3*4=<<3*4=12>>12\n#### 12", "dana"),
            mk("so 3+4=<<3+4=7>>7\n#### 7", "then 3-4+9=<<3-4+9=8>>8\n#### 8", "alex"),
        ];
        let mut dpo = DpoConfig::toy();
        dpo.profile.max_steps = Some(30);
        dpo.profile.batch_size = 2;
        dpo.profile.learning_rate = 1e-3;
        let mut ledger = ComputeLedger::new(0);
        let (out, run) = dpo_step(&sft, &pairs, &dpo, 3, &tok, &mut ledger).unwrap();
        assert!(run.final_loss().unwrap() < std::f64::consts::LN_2);
        assert_eq!(out.role, Role::Dpo);
        assert!(ledger.infer_tokens > 0, "reference precompute counted");
    }

    #[test]
    fn sft_step_counts_and_union() {
        let (base, tok, labeled) = micro_setup();
        // an untrained generator rarely answers correctly: |S| is exact,
        // |S^alpha| ≤ |S|
        let generator = base.with_role(Role::Sft);
        let unlabeled = labeled.strip_rationales();
        let mut cfg = LoopConfig {
            sft_samples_per_question: 2,
            max_new_tokens: 24,
            ..LoopConfig::default()
        };
        cfg.lane_batch = 8;
        let mut ledger = ComputeLedger::new(0);
        let out = sft_step(&generator, &unlabeled, &labeled, &cfg, 1, &tok, &mut ledger).unwrap();
        assert_eq!(out.pseudo.len(), 2 * unlabeled.len());
        assert!(out.filtered.len() <= out.pseudo.len());
        assert!(out.filtered.is_subset_of(&out.pseudo));
        // gold data is never dropped
        assert!(out.train_set.len() >= labeled.len());
        for (a, b) in labeled.items.iter().zip(out.train_set.items.iter()) {
            assert_eq!(a, b);
        }
        // provenance recorded
        assert!(out.pseudo.items.iter().all(|i| i.source.is_some()));
    }

    #[test]
    fn sft_step_rejects_base_generator() {
        let (base, tok, labeled) = micro_setup();
        let unlabeled = labeled.strip_rationales();
        let mut ledger = ComputeLedger::new(0);
        assert!(matches!(
            sft_step(&base, &unlabeled, &labeled, &LoopConfig::default(), 1, &tok, &mut ledger),
            Err(SelfTrainError::RoleMismatch { .. })
        ));
    }
}
