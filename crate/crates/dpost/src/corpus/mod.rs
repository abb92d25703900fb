//! Problem corpus: data model, JSONL ingestion, synthetic generation,
//! answer extraction, annotation parsing, and Jaccard deduplication.

pub mod annotations;
pub mod answer;
pub mod dedup;
pub mod jsonl;
pub mod synth;
pub mod validate;

pub use annotations::{
    parse_annotations, scan_annotations, strip_annotations, AnnotationScan, AnnotationSpan,
    MalformedAnnotation, MalformedKind,
};
pub use answer::{extract_answer, numeric_equal, AnswerError, ANSWER_MARKER, ANSWER_TOLERANCE};
pub use dedup::{deduplicate, jaccard, token_set};
pub use jsonl::{load_jsonl, save_jsonl};
pub use synth::generate_synthetic;
pub use validate::{validate_dataset, validate_problem};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid corpus data: {0}")]
    Invalid(String),
}

/// A chain-of-thought rationale with its parsed annotations and final answer.
///
/// The text is the source of truth; `annotations` and `answer` are derived
/// deterministically from it at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Rationale {
    pub text: String,
    pub annotations: Vec<AnnotationSpan>,
    pub answer: Option<f64>,
}

impl Rationale {
    pub fn parse(text: impl Into<String>) -> Self {
        let text = text.into();
        let annotations = parse_annotations(&text);
        let answer = extract_answer(&text).ok();
        Rationale {
            text,
            annotations,
            answer,
        }
    }

    /// True when every annotation is well-formed and exact under the
    /// evaluator, and nothing was flagged as malformed.
    pub fn annotations_valid(&self) -> bool {
        let scan = scan_annotations(&self.text);
        scan.malformed.is_empty() && scan.spans.iter().all(|s| s.is_exact())
    }
}

/// One math word problem: question, optional gold rationale, gold answer.
///
/// `gold_answer` keeps the surface string from the data file (canonical for
/// synthetic data) so round-trips are byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub id: String,
    pub question: String,
    pub gold_rationale: Option<Rationale>,
    pub gold_answer: String,
}

impl Problem {
    pub fn gold_answer_value(&self) -> Option<f64> {
        answer::parse_answer_token(&self.gold_answer)
    }

    /// Unlabeled view: same question and gold answer, rationale dropped.
    pub fn without_rationale(&self) -> Problem {
        Problem {
            id: self.id.clone(),
            question: self.question.clone(),
            gold_rationale: None,
            gold_answer: self.gold_answer.clone(),
        }
    }
}

/// Which role a dataset plays in the self-training loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Gold-labeled problems (questions with human/generator rationales).
    Labeled,
    /// Questions with gold answers but no rationales.
    Unlabeled,
    /// Model-generated pseudo-labels, unfiltered (S).
    Pseudo,
    /// Answer-correct, deduplicated pseudo-labels (S^alpha).
    Filtered,
}

/// A problem plus provenance: for pseudo/filtered data, which checkpoint
/// generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub problem: Problem,
    pub source: Option<String>,
}

impl From<Problem> for DatasetItem {
    fn from(problem: Problem) -> Self {
        DatasetItem {
            problem,
            source: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub items: Vec<DatasetItem>,
}

impl Dataset {
    pub fn new(kind: DatasetKind, items: Vec<DatasetItem>) -> Self {
        Dataset { kind, items }
    }

    pub fn labeled(problems: Vec<Problem>) -> Self {
        Dataset {
            kind: DatasetKind::Labeled,
            items: problems.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn problems(&self) -> impl Iterator<Item = &Problem> {
        self.items.iter().map(|it| &it.problem)
    }

    /// Unlabeled view of this dataset (U = {(x, a)}).
    pub fn strip_rationales(&self) -> Dataset {
        Dataset {
            kind: DatasetKind::Unlabeled,
            items: self
                .items
                .iter()
                .map(|it| DatasetItem {
                    problem: it.problem.without_rationale(),
                    source: None,
                })
                .collect(),
        }
    }

    /// True when every (id, rationale text) of `self` also appears in `other`.
    /// Used to check the filtered-subset invariant.
    pub fn is_subset_of(&self, other: &Dataset) -> bool {
        use std::collections::HashSet;
        let pool: HashSet<(&str, Option<&str>)> = other
            .items
            .iter()
            .map(|it| {
                (
                    it.problem.id.as_str(),
                    it.problem.gold_rationale.as_ref().map(|r| r.text.as_str()),
                )
            })
            .collect();
        self.items.iter().all(|it| {
            pool.contains(&(
                it.problem.id.as_str(),
                it.problem.gold_rationale.as_ref().map(|r| r.text.as_str()),
            ))
        })
    }
}
