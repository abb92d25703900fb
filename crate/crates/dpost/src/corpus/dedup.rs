//! Jaccard-similarity deduplication of rationales.

use crate::corpus::{strip_annotations, Rationale};
use std::collections::BTreeSet;

/// Token universe for similarity: whitespace-split tokens of the rationale
/// with every `<<...>>` annotation removed, leaving the surface result.
pub fn token_set(rationale_text: &str) -> BTreeSet<String> {
    strip_annotations(rationale_text)
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

/// |a ∩ b| / |a ∪ b|, defined as 1.0 when both sets are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Greedy first-wins deduplication in input order: a rationale is kept iff
/// its Jaccard similarity to every already-kept rationale is below the
/// threshold. Idempotent and order preserving.
pub fn deduplicate(rationales: Vec<Rationale>, threshold: f64) -> Vec<Rationale> {
    assert!(
        threshold > 0.0 && threshold <= 1.0,
        "dedup threshold must lie in (0, 1], got {threshold}"
    );
    let mut kept: Vec<Rationale> = Vec::new();
    let mut kept_sets: Vec<BTreeSet<String>> = Vec::new();
    for r in rationales {
        let set = token_set(&r.text);
        if kept_sets.iter().all(|k| jaccard(k, &set) < threshold) {
            kept.push(r);
            kept_sets.push(set);
        }
    }
    kept
}
