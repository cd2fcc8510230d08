//! Recursive-descent parser for the formula text syntax.
//!
//! ```text
//! formula := term { "|" term }
//! term    := until { "&" until }
//! until   := unary { "U[" INT "," INT "]" unary }
//! unary   := "!" unary | "F[" INT "," INT "]" unary | "G[" INT "," INT "]" unary | atom
//! atom    := "(" formula ")" | pred
//! pred    := IDENT CMP NUMBER
//! CMP     := ">" | ">=" | "<" | "<="
//! ```
//!
//! Whitespace is insignificant. Prefix operators bind tighter than `U`, so
//! `!a>0 U[0,2] b>0` is `(!a>0) U[0,2] b>0`; Until chains associate to the
//! left.

use std::fmt;

use thiserror::Error;

use super::{Cmp, Formula, Interval};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    Interval { lo: usize, hi: usize },
    UnknownComparison(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the input.
    pub position: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => {
                write!(f, "syntax error at position {}: {msg}", self.position)
            }
            ParseErrorKind::Interval { lo, hi } => write!(
                f,
                "interval error at position {}: [{lo},{hi}] has lower bound above upper bound",
                self.position
            ),
            ParseErrorKind::UnknownComparison(op) => write!(
                f,
                "unknown comparison operator '{op}' at position {}",
                self.position
            ),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let f = p.formula()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax(format!("unexpected trailing input '{}'", &text[p.pos..])));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax(msg.into()),
            position: self.pos,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{}'", c as char)))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.term()?;
        while self.eat(b'|') {
            let rhs = self.term()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.eat(b'&') {
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.at_temporal_op(b'U') {
            self.pos += 1;
            let interval = self.interval()?;
            let rhs = self.unary()?;
            lhs = Formula::until(interval, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat(b'!') {
            return Ok(Formula::not(self.unary()?));
        }
        for (op, make) in [
            (b'F', Formula::eventually as fn(Interval, Formula) -> Formula),
            (b'G', Formula::globally),
        ] {
            if self.at_temporal_op(op) {
                self.pos += 1;
                let interval = self.interval()?;
                let child = self.unary()?;
                return Ok(make(interval, child));
            }
        }
        self.atom()
    }

    /// True when the next token is the single letter `op` followed by `[`.
    fn at_temporal_op(&mut self, op: u8) -> bool {
        if self.peek() != Some(op) {
            return false;
        }
        let next = self.src.get(self.pos + 1).copied();
        if next.is_some_and(is_ident_char) {
            return false;
        }
        let mut i = self.pos + 1;
        while i < self.src.len() && self.src[i].is_ascii_whitespace() {
            i += 1;
        }
        self.src.get(i) == Some(&b'[')
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        if self.eat(b'(') {
            let inner = self.formula()?;
            self.expect(b')')?;
            Ok(inner)
        } else {
            self.predicate()
        }
    }

    fn predicate(&mut self) -> Result<Formula, ParseError> {
        let channel = self.ident()?;
        let cmp = self.comparison()?;
        let threshold = self.number()?;
        Ok(Formula::pred(channel, cmp, threshold))
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => {}
            Some(c) => {
                return Err(self.syntax(format!(
                    "expected a predicate or '(', found '{}'",
                    *c as char
                )))
            }
            None => return Err(self.syntax("unexpected end of input")),
        }
        while self.pos < self.src.len() && is_ident_char(self.src[self.pos]) {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn comparison(&mut self) -> Result<Cmp, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && b"<>=!".contains(&self.src[self.pos]) {
            self.pos += 1;
        }
        let op = &self.src[start..self.pos];
        let cmp = match op {
            b">" => Cmp::Gt,
            b">=" => Cmp::Ge,
            b"<" => Cmp::Lt,
            b"<=" => Cmp::Le,
            [] => {
                return Err(self.syntax("expected comparison operator (>, >=, <, <=)"));
            }
            other => {
                return Err(ParseError {
                    kind: ParseErrorKind::UnknownComparison(
                        String::from_utf8_lossy(other).into_owned(),
                    ),
                    position: start,
                })
            }
        };
        Ok(cmp)
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src;
        let mut i = self.pos;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            i += 1;
        }
        let digits_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let mut ndigits = i - digits_start;
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            let frac = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            ndigits += i - frac;
        }
        if ndigits == 0 {
            return Err(self.syntax("expected a number"));
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                j += 1;
            }
            let exp_digits = j;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > exp_digits {
                i = j;
            }
        }
        let text = std::str::from_utf8(&bytes[start..i]).expect("ascii");
        let value: f64 = text
            .parse()
            .map_err(|_| self.syntax(format!("malformed number '{text}'")))?;
        if !value.is_finite() {
            return Err(self.syntax(format!("number '{text}' is out of range")));
        }
        self.pos = i;
        Ok(value)
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected a non-negative integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|_| ParseError {
                kind: ParseErrorKind::Syntax("integer out of range".into()),
                position: start,
            })
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        self.expect(b'[')?;
        let start = self.pos;
        let lo = self.integer()?;
        self.expect(b',')?;
        let hi = self.integer()?;
        self.expect(b']')?;
        Interval::new(lo, hi).map_err(|_| ParseError {
            kind: ParseErrorKind::Interval { lo, hi },
            position: start,
        })
    }
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::format_formula;

    fn iv(lo: usize, hi: usize) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn single_predicate() {
        assert_eq!(
            parse_formula("R>0.8").unwrap(),
            Formula::pred("R", Cmp::Gt, 0.8)
        );
        assert_eq!(
            parse_formula("  speed <= -1.5e-2 ").unwrap(),
            Formula::pred("speed", Cmp::Le, -0.015)
        );
    }

    #[test]
    fn nested_temporal() {
        assert_eq!(
            parse_formula("F[0,2] G[0,5] R>0.8").unwrap(),
            Formula::eventually(
                iv(0, 2),
                Formula::globally(iv(0, 5), Formula::pred("R", Cmp::Gt, 0.8))
            )
        );
    }

    #[test]
    fn inverted_interval_is_interval_error() {
        let err = parse_formula("F[3,1] x>0").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Interval { lo: 3, hi: 1 });
        assert_eq!(err.position, 2);
    }

    #[test]
    fn unknown_comparison() {
        let err = parse_formula("x == 1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownComparison("==".into()));
        assert_eq!(err.position, 2);
        assert!(matches!(
            parse_formula("x => 1").unwrap_err().kind,
            ParseErrorKind::UnknownComparison(_)
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_formula("x>0 & (y<1").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(err.position, 10);
        assert_eq!(parse_formula("x>").unwrap_err().position, 2);
        assert_eq!(parse_formula("x>0 y>0").unwrap_err().position, 4);
        assert!(parse_formula("").is_err());
        assert!(parse_formula("F[0,1]").is_err());
    }

    #[test]
    fn precedence_and_binds_tighter_than_or() {
        let f = parse_formula("a>0 | b>0 & c>0").unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::pred("a", Cmp::Gt, 0.0),
                Formula::and(Formula::pred("b", Cmp::Gt, 0.0), Formula::pred("c", Cmp::Gt, 0.0))
            )
        );
    }

    #[test]
    fn until_is_left_associative() {
        let f = parse_formula("a>0 U[0,1] b>0 U[1,2] c>0").unwrap();
        let ab = Formula::until(
            iv(0, 1),
            Formula::pred("a", Cmp::Gt, 0.0),
            Formula::pred("b", Cmp::Gt, 0.0),
        );
        assert_eq!(f, Formula::until(iv(1, 2), ab, Formula::pred("c", Cmp::Gt, 0.0)));
    }

    #[test]
    fn parenthesized_until_operand() {
        let f = parse_formula("(!(Y>0.8)) U[0,2] R>0.8").unwrap();
        assert_eq!(
            f,
            Formula::until(
                iv(0, 2),
                Formula::not(Formula::pred("Y", Cmp::Gt, 0.8)),
                Formula::pred("R", Cmp::Gt, 0.8)
            )
        );
    }

    #[test]
    fn prefix_operators_bind_tighter_than_until() {
        let f = parse_formula("!Y>0.8 U[0,2] F[0,1] R>0.8").unwrap();
        assert_eq!(
            f,
            Formula::until(
                iv(0, 2),
                Formula::not(Formula::pred("Y", Cmp::Gt, 0.8)),
                Formula::eventually(iv(0, 1), Formula::pred("R", Cmp::Gt, 0.8))
            )
        );
        let g = parse_formula("F[0,1] a>0 U[0,2] b>0").unwrap();
        assert!(matches!(g, Formula::Until { ref left, .. } if matches!(**left, Formula::Eventually(..))));
        let h = parse_formula("a>0 & b>0 U[0,1] c>0").unwrap();
        assert!(matches!(h, Formula::And(_, ref r) if matches!(**r, Formula::Until { .. })));
    }

    #[test]
    fn letters_f_g_u_are_valid_channels() {
        assert_eq!(parse_formula("F>1").unwrap(), Formula::pred("F", Cmp::Gt, 1.0));
        assert_eq!(
            parse_formula("G[0,1] U<2").unwrap(),
            Formula::globally(iv(0, 1), Formula::pred("U", Cmp::Lt, 2.0))
        );
        assert_eq!(parse_formula("Fx>0").unwrap(), Formula::pred("Fx", Cmp::Gt, 0.0));
    }

    #[test]
    fn figure_formulas_round_trip() {
        for text in [
            "F[0,3] (R>0.8 & F[0,3] (J>0.8 & F[0,4] Y>0.8))",
            "!(Y>0.8) U[0,2] (R>0.8 & (!(W>0.8) U[0,2] J>0.8))",
            "F[0,2] G[0,5] R>0.8",
        ] {
            let f = parse_formula(text).unwrap();
            assert_eq!(format_formula(&f), text);
        }
    }
}
