//! Parsing of `<<expr=result>>` calculation annotations.

use crate::calc::expr::{eval_expr, parse_expr, CalcValue};
use serde::{Deserialize, Serialize};

/// One well-formed calculation annotation inside a rationale.
///
/// `start..end` are byte offsets of the full `<<...>>` span. `result` keeps
/// the surface text so exactness checks can compare exact decimals rather
/// than floats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSpan {
    pub start: usize,
    pub end: usize,
    pub expression: String,
    pub result: String,
}

impl AnnotationSpan {
    pub fn result_value(&self) -> Option<f64> {
        CalcValue::parse_decimal(&self.result).ok().map(|v| v.to_f64())
    }

    /// True when the recorded result exactly equals the evaluator's value of
    /// the expression (compared as rationals, so `2.50` matches `2.5`).
    pub fn is_exact(&self) -> bool {
        let Ok(value) = eval_expr(&self.expression) else {
            return false;
        };
        let Ok(recorded) = CalcValue::parse_decimal(&self.result) else {
            return false;
        };
        value == recorded
    }
}

/// Why a span was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MalformedKind {
    Unclosed,
    EmptyExpression,
    NoEquals,
    BadExpression,
    BadResult,
}

/// A skipped, malformed annotation (reported, never fatal).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedAnnotation {
    pub start: usize,
    pub kind: MalformedKind,
    pub raw: String,
}

/// Result of scanning a rationale for annotations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationScan {
    pub spans: Vec<AnnotationSpan>,
    pub malformed: Vec<MalformedAnnotation>,
}

/// Scan `text` for `<<expr=result>>` spans, in order. Malformed spans
/// (unclosed, empty or unparseable expression, non-numeric result) are
/// skipped and reported. A `<<` inside an open span restarts the scan at the
/// inner `<<`, mirroring the decoder's lane state machine.
pub fn scan_annotations(text: &str) -> AnnotationScan {
    let mut scan = AnnotationScan::default();
    let bytes = text.as_bytes();
    let mut i = 0;
    while let Some(open) = find(bytes, b"<<", i) {
        let body_start = open + 2;
        let next_open = find(bytes, b"<<", body_start);
        let close = find(bytes, b">>", body_start);
        let (body_end, closed) = match (next_open, close) {
            (Some(o), Some(c)) if o < c => (o, false),
            (_, Some(c)) => (c, true),
            (Some(o), None) => (o, false),
            (None, None) => (bytes.len(), false),
        };
        let raw_end = if closed { body_end + 2 } else { body_end };
        let raw = text[open..raw_end].to_string();
        if !closed {
            scan.malformed.push(MalformedAnnotation {
                start: open,
                kind: MalformedKind::Unclosed,
                raw,
            });
            i = body_end;
            continue;
        }
        let body = &text[body_start..body_end];
        match body.rfind('=') {
            None => scan.malformed.push(MalformedAnnotation {
                start: open,
                kind: MalformedKind::NoEquals,
                raw,
            }),
            Some(eq) => {
                let expression = body[..eq].trim().to_string();
                let result = body[eq + 1..].trim().to_string();
                if expression.is_empty() {
                    scan.malformed.push(MalformedAnnotation {
                        start: open,
                        kind: MalformedKind::EmptyExpression,
                        raw,
                    });
                } else if parse_expr(&expression).is_err() {
                    scan.malformed.push(MalformedAnnotation {
                        start: open,
                        kind: MalformedKind::BadExpression,
                        raw,
                    });
                } else if CalcValue::parse_decimal(&result).is_err() {
                    scan.malformed.push(MalformedAnnotation {
                        start: open,
                        kind: MalformedKind::BadResult,
                        raw,
                    });
                } else {
                    scan.spans.push(AnnotationSpan {
                        start: open,
                        end: raw_end,
                        expression,
                        result,
                    });
                }
            }
        }
        i = raw_end;
    }
    scan
}

/// All well-formed annotation spans of `text`, in order.
pub fn parse_annotations(text: &str) -> Vec<AnnotationSpan> {
    scan_annotations(text).spans
}

/// Remove every `<<...>>` span (well-formed or not) from the text, leaving
/// the surrounding surface form. Used by Jaccard deduplication.
pub fn strip_annotations(text: &str) -> String {
    let scan = scan_annotations(text);
    let mut ranges: Vec<(usize, usize)> = scan.spans.iter().map(|s| (s.start, s.end)).collect();
    ranges.extend(scan.malformed.iter().map(|m| (m.start, m.start + m.raw.len())));
    ranges.sort_unstable();
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for (s, e) in ranges {
        if s >= cursor {
            out.push_str(&text[cursor..s]);
            cursor = e;
        }
    }
    out.push_str(&text[cursor..]);
    out
}

fn find(haystack: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    if from >= haystack.len() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_figure_span() {
        let spans = parse_annotations("3*2=<<3*2=6>>6 pages");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].expression, "3*2");
        assert_eq!(spans[0].result, "6");
        assert!(spans[0].is_exact());
        assert_eq!(&"3*2=<<3*2=6>>6 pages"[spans[0].start..spans[0].end], "<<3*2=6>>");
    }

    #[test]
    fn empty_text() {
        assert!(parse_annotations("").is_empty());
    }

    #[test]
    fn two_spans_in_order_checked_against_evaluator() {
        let spans = parse_annotations("a <<1+2=3>> b <<10/4=2.5>> c");
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].result, "3");
        assert_eq!(spans[1].result, "2.5");
        for s in &spans {
            let v = eval_expr(&s.expression).unwrap();
            assert_eq!(v.canonical(), s.result);
        }
    }

    #[test]
    fn malformed_are_skipped_and_reported() {
        let scan = scan_annotations("x <<1+= 2>> y <<unclosed");
        assert!(scan.spans.is_empty());
        assert_eq!(scan.malformed.len(), 2);
        assert_eq!(scan.malformed[0].kind, MalformedKind::BadExpression);
        assert_eq!(scan.malformed[1].kind, MalformedKind::Unclosed);
    }

    #[test]
    fn nested_open_restarts_scan() {
        let scan = scan_annotations("<<a<<3*2=6>>");
        assert_eq!(scan.malformed.len(), 1);
        assert_eq!(scan.malformed[0].kind, MalformedKind::Unclosed);
        assert_eq!(scan.spans.len(), 1);
        assert_eq!(scan.spans[0].expression, "3*2");
    }

    #[test]
    fn inexact_span_detected() {
        let spans = parse_annotations("<<2+2=5>>");
        assert_eq!(spans.len(), 1);
        assert!(!spans[0].is_exact());
    }

    #[test]
    fn strip_removes_spans() {
        assert_eq!(strip_annotations("3*2=<<3*2=6>>6 pages"), "3*2=6 pages");
        assert_eq!(strip_annotations("keep <<bad"), "keep ");
        assert_eq!(strip_annotations("plain"), "plain");
    }
}
