//! Corpus invariant checker. Used both as a guard after generation/loading
//! and as the independent oracle in tests.

use crate::corpus::{
    extract_answer, numeric_equal, scan_annotations, CorpusError, Dataset, DatasetKind, Problem,
};

pub fn validate_problem(problem: &Problem) -> Result<(), CorpusError> {
    let fail = |msg: String| Err(CorpusError::Invalid(format!("{}: {msg}", problem.id)));
    if problem.question.trim().is_empty() {
        return fail("question is empty".into());
    }
    let Some(gold) = problem.gold_answer_value() else {
        return fail(format!("gold answer {:?} is not numeric", problem.gold_answer));
    };
    if let Some(rationale) = &problem.gold_rationale {
        let extracted = match extract_answer(&rationale.text) {
            Ok(a) => a,
            Err(e) => return fail(format!("rationale answer: {e}")),
        };
        if !numeric_equal(extracted, gold) {
            return fail(format!("extracted answer {extracted} != gold {gold}"));
        }
        let scan = scan_annotations(&rationale.text);
        if let Some(m) = scan.malformed.first() {
            return fail(format!("malformed annotation at byte {}: {:?}", m.start, m.kind));
        }
        for span in &scan.spans {
            if !span.is_exact() {
                return fail(format!(
                    "annotation <<{}={}>> disagrees with the evaluator",
                    span.expression, span.result
                ));
            }
        }
        // spans come back ordered; check non-overlap
        for w in scan.spans.windows(2) {
            if w[1].start < w[0].end {
                return fail("overlapping annotation spans".into());
            }
        }
    }
    Ok(())
}

pub fn validate_dataset(dataset: &Dataset) -> Result<(), CorpusError> {
    for item in &dataset.items {
        match dataset.kind {
            DatasetKind::Labeled if item.problem.gold_rationale.is_none() => {
                return Err(CorpusError::Invalid(format!(
                    "{}: labeled problem without rationale",
                    item.problem.id
                )));
            }
            DatasetKind::Unlabeled if item.problem.gold_rationale.is_some() => {
                return Err(CorpusError::Invalid(format!(
                    "{}: unlabeled problem carries a rationale",
                    item.problem.id
                )));
            }
            DatasetKind::Pseudo | DatasetKind::Filtered if item.source.is_none() => {
                return Err(CorpusError::Invalid(format!(
                    "{}: pseudo-labeled problem without provenance",
                    item.problem.id
                )));
            }
            _ => {}
        }
        validate_problem(&item.problem)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, Rationale};

    #[test]
    fn synthetic_data_validates() {
        validate_dataset(&generate_synthetic(9, 100, 1..=4)).unwrap();
    }

    #[test]
    fn wrong_answer_is_rejected() {
        let mut ds = generate_synthetic(9, 1, 1..=1);
        ds.items[0].problem.gold_answer = "12345".into();
        assert!(validate_dataset(&ds).is_err());
    }

    #[test]
    fn inexact_annotation_is_rejected() {
        let mut ds = generate_synthetic(9, 1, 1..=1);
        ds.items[0].problem.gold_rationale = Some(Rationale::parse("so 2+2=<<2+2=5>>5\n#### 5"));
        ds.items[0].problem.gold_answer = "5".into();
        assert!(validate_dataset(&ds).is_err());
    }

    #[test]
    fn pseudo_requires_provenance() {
        let mut ds = generate_synthetic(9, 1, 1..=1);
        ds.kind = crate::corpus::DatasetKind::Pseudo;
        assert!(validate_dataset(&ds).is_err());
        ds.items[0].source = Some("ckpt".into());
        validate_dataset(&ds).unwrap();
    }
}
