//! Final-answer extraction and numeric comparison.
//!
//! Answers live on the last `#### ` marker of a rationale. Two answers are
//! considered equal when they differ by at most [`ANSWER_TOLERANCE`] after
//! parsing, which normalizes signs and trailing zeros.

use thiserror::Error;

/// The answer marker GSM8K-style rationales end with.
pub const ANSWER_MARKER: &str = "#### ";

/// Absolute tolerance used by [`numeric_equal`].
pub const ANSWER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnswerError {
    #[error("rationale has no `#### ` answer marker")]
    NoAnswerMarker,
    #[error("token after `#### ` is not numeric: {0:?}")]
    UnparseableAnswer(String),
}

/// Parse a decimal answer token: optional sign, optional decimal point,
/// thousands separators tolerated.
pub fn parse_answer_token(token: &str) -> Option<f64> {
    let cleaned: String = token.trim().replace(',', "");
    let cleaned = cleaned.strip_prefix('+').unwrap_or(&cleaned);
    if cleaned.is_empty() {
        return None;
    }
    let body = cleaned.strip_prefix('-').unwrap_or(cleaned);
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return None;
    }
    if body.chars().filter(|&c| c == '.').count() > 1 || body == "." {
        return None;
    }
    cleaned.parse::<f64>().ok()
}

/// Return the number following the final `#### ` marker.
pub fn extract_answer(rationale_text: &str) -> Result<f64, AnswerError> {
    let idx = rationale_text
        .rfind(ANSWER_MARKER)
        .ok_or(AnswerError::NoAnswerMarker)?;
    let tail = &rationale_text[idx + ANSWER_MARKER.len()..];
    let token = tail.split_whitespace().next().unwrap_or("");
    parse_answer_token(token).ok_or_else(|| AnswerError::UnparseableAnswer(token.to_string()))
}

/// Answer comparison semantics: |x - y| <= 1e-6 after parsing.
pub fn numeric_equal(x: f64, y: f64) -> bool {
    (x - y).abs() <= ANSWER_TOLERANCE
}
