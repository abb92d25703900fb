//! Streaming calculator interceptor.
//!
//! Each decode lane runs a small state machine: `<<` opens an expression
//! buffer, `=` triggers evaluation, and the following proposals are
//! overridden with the canonical result, `>>`, and (by default) the result
//! echo that GSM8K rationales carry after the annotation. Lanes are fully
//! independent, so the interceptor works at any batch size.

use crate::calc::expr::eval_expr;
use crate::engine::generate::Interceptor;
use crate::engine::tokenizer::{TokenId, Tokenizer, EOS};
use std::collections::{HashMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneMode {
    Passthrough,
    InExpr,
    Forcing,
}

#[derive(Debug, Clone)]
pub struct LaneState {
    pub mode: LaneMode,
    pub expr_buffer: String,
    pub force_queue: VecDeque<TokenId>,
}

impl Default for LaneState {
    fn default() -> Self {
        LaneState {
            mode: LaneMode::Passthrough,
            expr_buffer: String::new(),
            force_queue: VecDeque::new(),
        }
    }
}

/// A successfully forced annotation (audit record).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcedSpan {
    pub lane: usize,
    pub expression: String,
    pub result: String,
}

/// An abandoned annotation: the lane kept decoding model tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedEvent {
    pub lane: usize,
    pub expr_buffer: String,
    pub reason: String,
}

struct TokenTables {
    open: TokenId,
    close: TokenId,
    eq: TokenId,
    text: Vec<String>,
    char_ids: HashMap<char, TokenId>,
}

impl TokenTables {
    fn new(tokenizer: &Tokenizer) -> TokenTables {
        let mut char_ids = HashMap::new();
        for id in 0..tokenizer.vocab_size() as TokenId {
            let t = tokenizer.text(id);
            if t.chars().count() == 1 {
                let c = t.chars().next().unwrap();
                if c.is_ascii_digit() || c == '.' || c == '-' {
                    char_ids.insert(c, id);
                }
            }
        }
        TokenTables {
            open: tokenizer.id("<<").expect("tokenizer lacks <<"),
            close: tokenizer.id(">>").expect("tokenizer lacks >>"),
            eq: tokenizer.id("=").expect("tokenizer lacks ="),
            text: tokenizer.vocab(),
            char_ids,
        }
    }

    fn tokens_for(&self, rendered: &str) -> Option<Vec<TokenId>> {
        rendered.chars().map(|c| self.char_ids.get(&c).copied()).collect()
    }
}

/// Batched calculator interceptor; plug into
/// [`crate::engine::generate_batch`] to get Figure-4-style forced
/// annotations.
pub struct CalcInterceptor {
    tables: TokenTables,
    echo_result: bool,
    states: Vec<LaneState>,
    forced: Vec<ForcedSpan>,
    malformed: Vec<MalformedEvent>,
}

impl CalcInterceptor {
    pub fn new(tokenizer: &Tokenizer) -> CalcInterceptor {
        CalcInterceptor::with_echo(tokenizer, true)
    }

    /// `echo_result=false` suppresses the trailing result after `>>`.
    pub fn with_echo(tokenizer: &Tokenizer, echo_result: bool) -> CalcInterceptor {
        CalcInterceptor {
            tables: TokenTables::new(tokenizer),
            echo_result,
            states: Vec::new(),
            forced: Vec::new(),
            malformed: Vec::new(),
        }
    }

    pub fn forced_spans(&self) -> &[ForcedSpan] {
        &self.forced
    }

    pub fn malformed_events(&self) -> &[MalformedEvent] {
        &self.malformed
    }

    pub fn lane_state(&self, lane: usize) -> &LaneState {
        &self.states[lane]
    }

    fn record_malformed(&mut self, lane: usize, reason: &str) {
        let buffer = std::mem::take(&mut self.states[lane].expr_buffer);
        self.malformed.push(MalformedEvent {
            lane,
            expr_buffer: buffer,
            reason: reason.to_string(),
        });
    }

    /// One interception step for one lane: returns the emitted token.
    fn step(&mut self, lane: usize, proposal: TokenId) -> TokenId {
        match self.states[lane].mode {
            LaneMode::Passthrough => {
                if proposal == self.tables.open {
                    let st = &mut self.states[lane];
                    st.mode = LaneMode::InExpr;
                    st.expr_buffer.clear();
                }
                proposal
            }
            LaneMode::InExpr => {
                if proposal == self.tables.eq {
                    match eval_expr(&self.states[lane].expr_buffer) {
                        Ok(value) => {
                            let rendered = value.canonical();
                            match self.tables.tokens_for(&rendered) {
                                Some(result_tokens) => {
                                    let st = &mut self.states[lane];
                                    st.force_queue.clear();
                                    st.force_queue.extend(result_tokens.iter());
                                    st.force_queue.push_back(self.tables.close);
                                    if self.echo_result {
                                        st.force_queue.extend(result_tokens.iter());
                                    }
                                    st.mode = LaneMode::Forcing;
                                    let expression = std::mem::take(&mut st.expr_buffer);
                                    self.forced.push(ForcedSpan {
                                        lane,
                                        expression,
                                        result: rendered,
                                    });
                                }
                                None => {
                                    self.record_malformed(lane, "result not tokenizable");
                                    self.states[lane].mode = LaneMode::Passthrough;
                                }
                            }
                        }
                        Err(e) => {
                            self.record_malformed(lane, &e.to_string());
                            self.states[lane].mode = LaneMode::Passthrough;
                        }
                    }
                    proposal
                } else if proposal == self.tables.open {
                    // a fresh << restarts the annotation
                    self.record_malformed(lane, "reopened before =");
                    self.states[lane].expr_buffer.clear();
                    proposal
                } else if proposal == self.tables.close {
                    self.record_malformed(lane, "closed before =");
                    self.states[lane].mode = LaneMode::Passthrough;
                    proposal
                } else if proposal == EOS {
                    proposal
                } else {
                    let text = self.tables.text[proposal as usize].clone();
                    self.states[lane].expr_buffer.push_str(&text);
                    proposal
                }
            }
            LaneMode::Forcing => {
                let st = &mut self.states[lane];
                let tok = st
                    .force_queue
                    .pop_front()
                    .expect("FORCING lane with empty queue");
                if st.force_queue.is_empty() {
                    st.mode = LaneMode::Passthrough;
                }
                tok
            }
        }
    }
}

impl Interceptor for CalcInterceptor {
    fn begin(&mut self, lanes: usize) {
        self.states = vec![LaneState::default(); lanes];
        self.forced.clear();
        self.malformed.clear();
    }

    fn intercept(&mut self, lane: usize, proposal: TokenId) -> TokenId {
        self.step(lane, proposal)
    }

    fn finish_lane(&mut self, lane: usize) {
        match self.states[lane].mode {
            LaneMode::InExpr => {
                self.record_malformed(lane, "unclosed annotation at end of decode");
                self.states[lane].mode = LaneMode::Passthrough;
            }
            LaneMode::Forcing => {
                self.record_malformed(lane, "decode budget exhausted mid-forcing");
                self.states[lane].force_queue.clear();
                self.states[lane].mode = LaneMode::Passthrough;
            }
            LaneMode::Passthrough => {}
        }
    }
}
