//! Word-level tokenizer over the closed synthetic vocabulary.
//!
//! Digits are single-character tokens; the annotation delimiters `<<`, `>>`
//! and the answer marker `####` are atomic so the decoding interceptor is
//! token-aligned. Detokenization uses pairwise spacing rules chosen so that
//! the generator's surface forms round-trip exactly.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenKind {
    Pad,
    Bos,
    Eos,
    Unk,
    Newline,
    AnswerMarker,
    OpenAnnot,
    CloseAnnot,
    Digit,
    /// Arithmetic operator or `=`: glues to both neighbours.
    Operator,
    /// Decimal point: glues only between digits.
    Dot,
    OpenParen,
    CloseParen,
    /// Standalone symbol with normal word spacing (e.g. `:`).
    Symbol,
    Word,
}

#[derive(Debug, Clone)]
struct TokenEntry {
    text: String,
    kind: TokenKind,
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    entries: Vec<TokenEntry>,
    by_text: HashMap<String, TokenId>,
}

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;

impl Tokenizer {
    /// Build a tokenizer from word vocabulary. Specials, digits, and the
    /// arithmetic symbols are always present; `words` supplies the task's
    /// closed word list (order defines token ids, duplicates ignored).
    pub fn new<I, S>(words: I) -> Tokenizer
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut t = Tokenizer {
            entries: Vec::new(),
            by_text: HashMap::new(),
        };
        t.push("<pad>", TokenKind::Pad);
        t.push("<bos>", TokenKind::Bos);
        t.push("<eos>", TokenKind::Eos);
        t.push("<unk>", TokenKind::Unk);
        t.push("\n", TokenKind::Newline);
        t.push("####", TokenKind::AnswerMarker);
        t.push("<<", TokenKind::OpenAnnot);
        t.push(">>", TokenKind::CloseAnnot);
        for d in 0..10u32 {
            t.push(&d.to_string(), TokenKind::Digit);
        }
        for op in ["+", "-", "*", "/", "="] {
            t.push(op, TokenKind::Operator);
        }
        t.push(".", TokenKind::Dot);
        t.push("(", TokenKind::OpenParen);
        t.push(")", TokenKind::CloseParen);
        t.push(":", TokenKind::Symbol);
        for w in words {
            let w = w.as_ref();
            if !t.by_text.contains_key(w) {
                debug_assert!(w.chars().all(|c| c.is_ascii_lowercase()));
                t.push(w, TokenKind::Word);
            }
        }
        t
    }

    /// The tokenizer used by the synthetic task.
    pub fn standard() -> Tokenizer {
        use crate::corpus::synth::{GRAMMAR_WORDS, ITEMS, NAMES};
        let words = GRAMMAR_WORDS
            .iter()
            .chain(NAMES.iter())
            .chain(ITEMS.iter());
        Tokenizer::new(words)
    }

    fn push(&mut self, text: &str, kind: TokenKind) {
        let id = self.entries.len() as TokenId;
        self.entries.push(TokenEntry {
            text: text.to_string(),
            kind,
        });
        self.by_text.insert(text.to_string(), id);
    }

    pub fn vocab_size(&self) -> usize {
        self.entries.len()
    }

    pub fn kind(&self, id: TokenId) -> TokenKind {
        self.entries[id as usize].kind
    }

    pub fn text(&self, id: TokenId) -> &str {
        &self.entries[id as usize].text
    }

    pub fn id(&self, text: &str) -> Option<TokenId> {
        self.by_text.get(text).copied()
    }

    /// Vocabulary texts in id order (for checkpoint files).
    pub fn vocab(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.text.clone()).collect()
    }

    /// Rebuild from a checkpoint vocabulary list. The list must start with
    /// the fixed special/symbol prefix produced by [`Tokenizer::new`].
    pub fn from_vocab(vocab: &[String]) -> Result<Tokenizer, String> {
        let words: Vec<&String> = vocab
            .iter()
            .filter(|w| {
                !w.is_empty() && w.chars().all(|c| c.is_ascii_lowercase())
            })
            .collect();
        let t = Tokenizer::new(words);
        let got = t.vocab();
        if got != vocab {
            return Err("vocabulary list does not match tokenizer layout".to_string());
        }
        Ok(t)
    }

    /// Encode text to token ids. Unknown words map to `<unk>`.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c == ' ' || c == '\t' || c == '\r' {
                i += 1;
                continue;
            }
            if c == '\n' {
                out.push(self.by_text["\n"]);
                i += 1;
                continue;
            }
            if bytes[i..].starts_with(b"####") {
                out.push(self.by_text["####"]);
                i += 4;
                continue;
            }
            if bytes[i..].starts_with(b"<<") {
                out.push(self.by_text["<<"]);
                i += 2;
                continue;
            }
            if bytes[i..].starts_with(b">>") {
                out.push(self.by_text[">>"]);
                i += 2;
                continue;
            }
            if c.is_ascii_alphabetic() {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphabetic() {
                    i += 1;
                }
                let word = &text[start..i];
                out.push(self.id(word).unwrap_or(UNK));
                continue;
            }
            let single = &text[i..i + 1];
            out.push(self.id(single).unwrap_or(UNK));
            i += 1;
        }
        out
    }

    /// True when encoding produces no `<unk>`.
    pub fn covers(&self, text: &str) -> bool {
        !self.encode(text).contains(&UNK)
    }

    /// Decode token ids to text. PAD/BOS/EOS render as nothing.
    pub fn decode(&self, tokens: &[TokenId]) -> String {
        let mut out = String::new();
        let mut prev: Option<TokenId> = None;
        for &id in tokens {
            let kind = self.kind(id);
            if matches!(kind, TokenKind::Pad | TokenKind::Bos | TokenKind::Eos) {
                continue;
            }
            if let Some(p) = prev {
                if !self.no_space_between(p, id) {
                    out.push(' ');
                }
            }
            out.push_str(self.text(id));
            prev = Some(id);
        }
        out
    }

    fn no_space_between(&self, a: TokenId, b: TokenId) -> bool {
        use TokenKind::*;
        let (ka, kb) = (self.kind(a), self.kind(b));
        // newlines swallow surrounding spaces
        if ka == Newline || kb == Newline {
            return true;
        }
        // the answer marker is always followed by a space
        if ka == AnswerMarker {
            return false;
        }
        // expressions glue around operators and annotation delimiters
        if ka == Operator || kb == Operator {
            return true;
        }
        if ka == OpenAnnot || kb == CloseAnnot || ka == CloseAnnot {
            return true;
        }
        // multi-digit numbers and decimal points
        if ka == Digit && kb == Digit {
            return true;
        }
        if (ka == Digit && kb == Dot) || (ka == Dot && kb == Digit) {
            return true;
        }
        if ka == OpenParen || kb == CloseParen {
            return true;
        }
        false
    }
}
