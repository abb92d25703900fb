//! Preference-pair construction for the DPO step: sample several rationales
//! per question, label answer-correct ones as winning and the rest as
//! losing, deduplicate each class, and emit every winning × losing cross
//! pair.

use crate::corpus::{deduplicate, numeric_equal, Dataset, Problem, Rationale};
use crate::engine::checkpoint::Checkpoint;
use crate::engine::generate::SamplingConfig;
use crate::engine::tokenizer::Tokenizer;
use crate::evalsuite::ComputeLedger;
use crate::selftrain::LoopConfig;
use crate::task::sample_rationales;

/// One element of the DPO dataset D.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferencePair {
    pub problem_id: String,
    pub question: String,
    pub winning: Rationale,
    pub losing: Rationale,
}

impl PreferencePair {
    /// Re-check the defining invariant from the texts alone.
    pub fn invariant_holds(&self, gold_answer: f64) -> bool {
        let win_ok = self
            .winning
            .answer
            .is_some_and(|a| numeric_equal(a, gold_answer));
        let lose_ok = match self.losing.answer {
            None => true,
            Some(a) => !numeric_equal(a, gold_answer),
        };
        win_ok && lose_ok
    }
}

/// Classify, deduplicate per class, and cross-pair the samples for one
/// question. Questions with no correct or no incorrect sample contribute
/// nothing.
pub fn pairs_from_samples(
    problem: &Problem,
    samples: &[Rationale],
    dedup_threshold: f64,
) -> Vec<PreferencePair> {
    let Some(gold) = problem.gold_answer_value() else {
        return Vec::new();
    };
    let mut correct = Vec::new();
    let mut incorrect = Vec::new();
    for r in samples {
        match r.answer {
            Some(a) if numeric_equal(a, gold) => correct.push(r.clone()),
            _ => incorrect.push(r.clone()),
        }
    }
    let winners = deduplicate(correct, dedup_threshold);
    let losers = deduplicate(incorrect, dedup_threshold);
    let mut pairs = Vec::with_capacity(winners.len() * losers.len());
    for w in &winners {
        for l in &losers {
            pairs.push(PreferencePair {
                problem_id: problem.id.clone(),
                question: problem.question.clone(),
                winning: w.clone(),
                losing: l.clone(),
            });
        }
    }
    pairs
}

/// Build the DPO dataset D from the SFT model: sample
/// `dpo_samples_per_question` rationales per unlabeled question at the loop
/// temperature and cross-pair the classes.
pub fn build_preference_data(
    sft: &Checkpoint,
    tokenizer: &Tokenizer,
    questions: &Dataset,
    cfg: &LoopConfig,
    seed: u64,
    ledger: &mut ComputeLedger,
) -> Vec<PreferencePair> {
    let problems: Vec<&Problem> = questions.problems().collect();
    let scfg = SamplingConfig {
        temperature: cfg.temperature,
        max_new_tokens: cfg.max_new_tokens,
        seed,
        calculator_enabled: cfg.calculator_enabled,
        ignore_eos: false,
    };
    let run = sample_rationales(
        &sft.model,
        tokenizer,
        &problems,
        cfg.dpo_samples_per_question,
        "dpo-data",
        &scfg,
        cfg.lane_batch,
    );
    ledger.add_infer_tokens(run.tokens_processed);
    problems
        .iter()
        .zip(&run.rationales)
        .flat_map(|(p, samples)| pairs_from_samples(p, samples, cfg.dedup_threshold))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem() -> Problem {
        Problem {
            id: "q1".into(),
            question: "dana has 3 coins then gets 4 more how many".into(),
            gold_rationale: None,
            gold_answer: "7".into(),
        }
    }

    fn correct(lead: &str) -> Rationale {
        Rationale::parse(format!("{lead} 3+4=<<3+4=7>>7\n#### 7"))
    }

    // distinct surfaces so dedup keeps them apart
    fn wrong(expr: &str, val: &str, item: &str) -> Rationale {
        Rationale::parse(format!("so the {item} total {expr}=<<{expr}={val}>>{val}\n#### {val}"))
    }

    #[test]
    fn two_correct_three_incorrect_gives_six() {
        let p = problem();
        let samples = vec![
            correct("now"),
            wrong("3*4", "12", "coins"),
            Rationale::parse("so it is 3+4+4=<<3+4+4=11>>11 coins and marbles\n#### 11"),
            correct("so the answer to how many is"),
            Rationale::parse("then dana loses 3-4+9=<<3-4+9=8>>8 shells pens\n#### 8"),
        ];
        let pairs = pairs_from_samples(&p, &samples, 0.7);
        assert_eq!(pairs.len(), 6);
        for pair in &pairs {
            assert!(pair.invariant_holds(7.0));
        }
    }

    #[test]
    fn all_correct_gives_none() {
        let p = problem();
        let samples = vec![correct("now"), correct("so"), correct("then")];
        assert!(pairs_from_samples(&p, &samples, 0.7).is_empty());
    }

    #[test]
    fn all_incorrect_gives_none() {
        let p = problem();
        let samples = vec![wrong("3*4", "12", "coins"), wrong("3-4+9", "8", "pens")];
        assert!(pairs_from_samples(&p, &samples, 0.7).is_empty());
    }

    #[test]
    fn missing_answer_marker_counts_as_losing() {
        let p = problem();
        let samples = vec![correct("now"), Rationale::parse("no marker at all")];
        let pairs = pairs_from_samples(&p, &samples, 0.7);
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].losing.answer.is_none());
    }

    #[test]
    fn near_duplicate_winners_collapse_before_pairing() {
        let p = problem();
        // identical token sets after annotation stripping
        let samples = vec![
            correct("now"),
            correct("now"),
            wrong("3*4", "12", "coins"),
        ];
        let pairs = pairs_from_samples(&p, &samples, 0.7);
        assert_eq!(pairs.len(), 1);
    }
}
