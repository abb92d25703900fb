//! Deterministic synthetic word-problem generator.
//!
//! Problems are templated two-entity counting stories over integers: an
//! opening count followed by 1..=5 arithmetic steps, each of which becomes
//! one `<<expr=result>>` annotation in the gold rationale. Intermediate
//! results stay integral (division steps only occur when they divide
//! exactly), so every annotation is exact under the evaluator.

use crate::calc::expr::eval_expr;
use crate::corpus::{Dataset, Problem, Rationale};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::ops::RangeInclusive;

pub const NAMES: [&str; 8] = [
    "alex", "bella", "carl", "dana", "emma", "felix", "grace", "henry",
];
pub const ITEMS: [&str; 8] = [
    "pens", "books", "apples", "coins", "cards", "shells", "stamps", "marbles",
];
/// Words used by the question/rationale templates (beyond names and items).
pub const GRAMMAR_WORDS: [&str; 12] = [
    "has", "then", "gets", "more", "loses", "times", "split", "by", "how", "many", "now", "so",
];
/// Rationale line lead-ins; the generator picks one per line, which gives
/// correct rationales more than one valid surface form.
pub const LEAD_WORDS: [&str; 3] = ["now", "so", "then"];

/// Intermediate totals stay within this bound to keep sequences short.
const MAX_TOTAL: i64 = 999;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
        }
    }
}

/// Generate `count` labeled problems, deterministically for a fixed seed.
///
/// `steps` is the inclusive range of arithmetic steps per problem and must
/// lie within 1..=5. Question surfaces are unique within one call.
pub fn generate_synthetic(seed: u64, count: usize, steps: RangeInclusive<usize>) -> Dataset {
    assert!(count > 0, "count must be positive");
    assert!(
        *steps.start() >= 1 && *steps.end() <= 5 && steps.start() <= steps.end(),
        "steps range must lie within 1..=5"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut problems = Vec::with_capacity(count);
    while problems.len() < count {
        let n_steps = rng.gen_range(steps.clone());
        let p = generate_one(&mut rng, problems.len(), n_steps);
        if seen.insert(p.question.clone()) {
            problems.push(p);
        }
    }
    Dataset::labeled(problems)
}

fn generate_one(rng: &mut ChaCha8Rng, index: usize, n_steps: usize) -> Problem {
    let name = NAMES[rng.gen_range(0..NAMES.len())];
    let item = ITEMS[rng.gen_range(0..ITEMS.len())];
    let mut total: i64 = rng.gen_range(2..=99);

    let mut question = format!("{name} has {total} {item}");
    let mut lines = Vec::with_capacity(n_steps + 1);

    for _ in 0..n_steps {
        let (op, operand, next) = pick_step(rng, total);
        match op {
            Op::Add => question.push_str(&format!(" then gets {operand} more")),
            Op::Sub => question.push_str(&format!(" then loses {operand}")),
            Op::Mul => question.push_str(&format!(" then times {operand}")),
            Op::Div => question.push_str(&format!(" then split by {operand}")),
        }
        let expr = format!("{total}{}{operand}", op.symbol());
        debug_assert_eq!(eval_expr(&expr).unwrap().canonical(), next.to_string());
        let lead = LEAD_WORDS[rng.gen_range(0..LEAD_WORDS.len())];
        lines.push(format!("{lead} {expr}=<<{expr}={next}>>{next}"));
        total = next;
    }
    question.push_str(" how many");
    lines.push(format!("#### {total}"));

    Problem {
        id: format!("p{index:05}"),
        question,
        gold_rationale: Some(Rationale::parse(lines.join("\n"))),
        gold_answer: total.to_string(),
    }
}

/// Choose a feasible operation for the current total. Keeps every
/// intermediate in [2, MAX_TOTAL] and divisions exact.
fn pick_step(rng: &mut ChaCha8Rng, total: i64) -> (Op, i64, i64) {
    let mut ops = vec![Op::Add];
    if total >= 4 {
        ops.push(Op::Sub);
    }
    if total * 2 <= MAX_TOTAL {
        ops.push(Op::Mul);
    }
    let divisors: Vec<i64> = (2..=9).filter(|d| total % d == 0 && total / d >= 2).collect();
    if !divisors.is_empty() {
        ops.push(Op::Div);
    }
    match ops[rng.gen_range(0..ops.len())] {
        Op::Add => {
            let k = rng.gen_range(2..=99.min(MAX_TOTAL - total));
            (Op::Add, k, total + k)
        }
        Op::Sub => {
            let k = rng.gen_range(2..=99.min(total - 2));
            (Op::Sub, k, total - k)
        }
        Op::Mul => {
            let k = rng.gen_range(2..=9.min(MAX_TOTAL / total));
            (Op::Mul, k, total * k)
        }
        Op::Div => {
            let k = divisors[rng.gen_range(0..divisors.len())];
            (Op::Div, k, total / k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{extract_answer, numeric_equal, parse_annotations, validate_dataset};

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = generate_synthetic(7, 1, 2..=2);
        let b = generate_synthetic(7, 1, 2..=2);
        assert_eq!(a, b);
    }

    #[test]
    fn generated_problems_parse_and_answer() {
        let ds = generate_synthetic(3, 50, 1..=5);
        for p in ds.problems() {
            let r = p.gold_rationale.as_ref().unwrap();
            let spans = parse_annotations(&r.text);
            assert!(!spans.is_empty());
            assert!(spans.iter().all(|s| s.is_exact()));
            let ans = extract_answer(&r.text).unwrap();
            assert!(numeric_equal(ans, p.gold_answer_value().unwrap()));
        }
    }

    #[test]
    fn validator_accepts_large_corpus() {
        let ds = generate_synthetic(7, 2000, 1..=3);
        assert_eq!(ds.len(), 2000);
        validate_dataset(&ds).unwrap();
    }

    #[test]
    fn step_counts_respect_range() {
        let ds = generate_synthetic(11, 40, 2..=2);
        for p in ds.problems() {
            assert_eq!(p.gold_rationale.as_ref().unwrap().annotations.len(), 2);
        }
    }

    #[test]
    fn questions_are_unique() {
        let ds = generate_synthetic(5, 500, 1..=3);
        let set: std::collections::HashSet<_> = ds.problems().map(|p| &p.question).collect();
        assert_eq!(set.len(), 500);
    }
}
