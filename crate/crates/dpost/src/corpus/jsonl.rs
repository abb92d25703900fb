//! JSONL serialization: one problem per line,
//! `{"id": str, "question": str, "rationale": str|null, "answer": str}`.
//! Pseudo/filtered data carries an extra optional `source` field recording
//! the generating checkpoint.

use crate::corpus::{CorpusError, Dataset, DatasetItem, DatasetKind, Problem, Rationale};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Line {
    id: String,
    question: String,
    rationale: Option<String>,
    answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

impl From<&DatasetItem> for Line {
    fn from(item: &DatasetItem) -> Self {
        Line {
            id: item.problem.id.clone(),
            question: item.problem.question.clone(),
            rationale: item.problem.gold_rationale.as_ref().map(|r| r.text.clone()),
            answer: item.problem.gold_answer.clone(),
            source: item.source.clone(),
        }
    }
}

pub fn to_jsonl_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    for item in &dataset.items {
        let line = Line::from(item);
        out.push_str(&serde_json::to_string(&line).expect("dataset lines are serializable"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl_str(text: &str, kind: DatasetKind) -> Result<Dataset, CorpusError> {
    let mut items = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(raw).map_err(|source| CorpusError::Json {
            line: i + 1,
            source,
        })?;
        items.push(DatasetItem {
            problem: Problem {
                id: line.id,
                question: line.question,
                gold_rationale: line.rationale.map(Rationale::parse),
                gold_answer: line.answer,
            },
            source: line.source,
        });
    }
    Ok(Dataset::new(kind, items))
}

pub fn save_jsonl(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    fs::write(path, to_jsonl_string(dataset))?;
    Ok(())
}

pub fn load_jsonl(path: impl AsRef<Path>, kind: DatasetKind) -> Result<Dataset, CorpusError> {
    let text = fs::read_to_string(path)?;
    from_jsonl_str(&text, kind)
}
