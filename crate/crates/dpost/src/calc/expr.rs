//! Arithmetic expression evaluation for calculator annotations.
//!
//! Expressions follow the grammar found inside `<<...=...>>` spans: decimal
//! numbers combined with `+ - * /`, parentheses, and an optional unary minus.
//! Evaluation is exact rational arithmetic; results render canonically as an
//! integer when integral, otherwise as a decimal with at most six fractional
//! digits. The canonical rendering is what the decoder forces token-by-token,
//! so it must be deterministic.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use thiserror::Error;

/// Maximum fractional digits in a canonical rendering.
pub const MAX_FRACTION_DIGITS: u32 = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("malformed expression: {0}")]
    Parse(String),
    #[error("division by zero")]
    DivisionByZero,
}

/// Binary operators of the annotation grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Number(BigRational),
    Neg(Box<ExprAst>),
    Bin(BinOp, Box<ExprAst>, Box<ExprAst>),
}

/// An exact calculator value with a canonical surface form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalcValue(BigRational);

impl CalcValue {
    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Canonical rendering: integer when integral, otherwise the shortest
    /// decimal with at most [`MAX_FRACTION_DIGITS`] fractional digits
    /// (rounded half away from zero when the expansion does not terminate).
    pub fn canonical(&self) -> String {
        let r = &self.0;
        if r.is_integer() {
            return r.to_integer().to_string();
        }
        let sign = if r.is_negative() { "-" } else { "" };
        let abs = r.abs();
        let scale = BigInt::from(10u32).pow(MAX_FRACTION_DIGITS);
        // round(abs * 10^6) half away from zero
        let scaled = &abs * BigRational::from_integer(scale.clone());
        let (q, rem) = (
            scaled.to_integer(),
            &scaled - BigRational::from_integer(scaled.to_integer()),
        );
        let rounded = if rem * BigInt::from(2) >= BigRational::one() {
            q + BigInt::from(1)
        } else {
            q
        };
        let int_part = &rounded / &scale;
        let mut frac_part = (&rounded % &scale).to_string();
        while frac_part.len() < MAX_FRACTION_DIGITS as usize {
            frac_part.insert(0, '0');
        }
        let frac_trimmed = frac_part.trim_end_matches('0');
        if frac_trimmed.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_trimmed}")
        }
    }

    /// Parse a decimal literal (optional sign, optional fraction) exactly.
    pub fn parse_decimal(text: &str) -> Result<CalcValue, ExprError> {
        let t = text.trim();
        let mut chars = t.chars().peekable();
        let mut negative = false;
        match chars.peek() {
            Some('-') => {
                negative = true;
                chars.next();
            }
            Some('+') => {
                chars.next();
            }
            _ => {}
        }
        let rest: String = chars.collect();
        if rest.is_empty() {
            return Err(ExprError::Parse(format!("not a number: {text:?}")));
        }
        let (int_str, frac_str) = match rest.split_once('.') {
            Some((i, f)) => (i, f),
            None => (rest.as_str(), ""),
        };
        if int_str.is_empty() && frac_str.is_empty() {
            return Err(ExprError::Parse(format!("not a number: {text:?}")));
        }
        if !int_str.chars().all(|c| c.is_ascii_digit())
            || !frac_str.chars().all(|c| c.is_ascii_digit())
        {
            return Err(ExprError::Parse(format!("not a number: {text:?}")));
        }
        let digits = format!("{int_str}{frac_str}");
        let num: BigInt = digits
            .parse()
            .map_err(|_| ExprError::Parse(format!("not a number: {text:?}")))?;
        let den = BigInt::from(10u32).pow(frac_str.len() as u32);
        let mut r = BigRational::new(num, den);
        if negative {
            r = -r;
        }
        Ok(CalcValue(r))
    }
}

impl fmt::Display for CalcValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn expr(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            let op = match c {
                b'+' => BinOp::Add,
                b'-' => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = ExprAst::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.factor()?;
        while let Some(c) = self.peek() {
            let op = match c {
                b'*' => BinOp::Mul,
                b'/' => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = ExprAst::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<ExprAst, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.bump();
                let inner = self.expr()?;
                match self.bump() {
                    Some(b')') => Ok(inner),
                    _ => Err(ExprError::Parse("missing closing parenthesis".into())),
                }
            }
            Some(b'-') => {
                self.bump();
                Ok(ExprAst::Neg(Box::new(self.factor()?)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) => Err(ExprError::Parse(format!(
                "unexpected character {:?}",
                c as char
            ))),
            None => Err(ExprError::Parse("unexpected end of expression".into())),
        }
    }

    fn number(&mut self) -> Result<ExprAst, ExprError> {
        self.skip_ws();
        let start = self.pos;
        let mut seen_dot = false;
        let mut seen_digit = false;
        while self.pos < self.src.len() {
            match self.src[self.pos] {
                b'0'..=b'9' => {
                    seen_digit = true;
                    self.pos += 1;
                }
                b'.' if !seen_dot => {
                    seen_dot = true;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        if !seen_digit {
            return Err(ExprError::Parse("expected a number".into()));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(ExprAst::Number(CalcValue::parse_decimal(text)?.0))
    }
}

/// Parse an expression without evaluating it.
pub fn parse_expr(expression: &str) -> Result<ExprAst, ExprError> {
    if expression.trim().is_empty() {
        return Err(ExprError::Parse("empty expression".into()));
    }
    let mut p = Parser::new(expression);
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ExprError::Parse(format!(
            "trailing input at byte {}",
            p.pos
        )));
    }
    Ok(ast)
}

fn eval_ast(ast: &ExprAst) -> Result<BigRational, ExprError> {
    match ast {
        ExprAst::Number(n) => Ok(n.clone()),
        ExprAst::Neg(inner) => Ok(-eval_ast(inner)?),
        ExprAst::Bin(op, a, b) => {
            let a = eval_ast(a)?;
            let b = eval_ast(b)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b.is_zero() {
                        Err(ExprError::DivisionByZero)
                    } else {
                        Ok(a / b)
                    }
                }
            }
        }
    }
}

/// Evaluate an annotation expression with standard precedence and exact
/// rational arithmetic.
pub fn eval_expr(expression: &str) -> Result<CalcValue, ExprError> {
    let ast = parse_expr(expression)?;
    Ok(CalcValue(eval_ast(&ast)?))
}
