//! Discrete-time signal temporal logic.
//!
//! Formulas are built from threshold predicates over named signal channels,
//! Boolean connectives and interval-bounded temporal operators. Time is the
//! sample index; every interval bound counts samples.
//!
//! Two independent evaluators live here: [`robustness`] computes the
//! quantitative space-robustness margin and [`satisfies`] evaluates plain
//! Boolean truth. The latter exists so the sign of the former can be checked
//! against it.

mod eval;
mod parser;
mod signal;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{robustness, robustness_row, satisfies};
pub use parser::{parse_formula, ParseError};
pub use signal::Signal;

/// Comparison used by a predicate `channel CMP threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    Gt,
    Ge,
    Lt,
    Le,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
        }
    }

    /// True for `>` and `>=`.
    pub fn is_lower_bound(self) -> bool {
        matches!(self, Cmp::Gt | Cmp::Ge)
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Cmp::Gt => value > threshold,
            Cmp::Ge => value >= threshold,
            Cmp::Lt => value < threshold,
            Cmp::Le => value <= threshold,
        }
    }
}

/// Closed window `[lo, hi]` of sample offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: usize,
    hi: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid interval [{lo},{hi}]: lower bound exceeds upper bound")]
pub struct IntervalError {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self, IntervalError> {
        if lo > hi {
            return Err(IntervalError { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    Predicate {
        channel: String,
        cmp: Cmp,
        threshold: f64,
    },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until {
        interval: Interval,
        left: Box<Formula>,
        right: Box<Formula>,
    },
    Eventually(Interval, Box<Formula>),
    Globally(Interval, Box<Formula>),
}

impl Formula {
    pub fn pred(channel: impl Into<String>, cmp: Cmp, threshold: f64) -> Self {
        Formula::Predicate {
            channel: channel.into(),
            cmp,
            threshold,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(interval: Interval, left: Formula, right: Formula) -> Self {
        Formula::Until {
            interval,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn eventually(interval: Interval, f: Formula) -> Self {
        Formula::Eventually(interval, Box::new(f))
    }

    pub fn globally(interval: Interval, f: Formula) -> Self {
        Formula::Globally(interval, Box::new(f))
    }

    /// Number of samples past the evaluation time that the formula reads.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::Predicate { .. } => 0,
            Formula::Not(f) => f.horizon(),
            Formula::And(a, b) | Formula::Or(a, b) => a.horizon().max(b.horizon()),
            Formula::Until {
                interval,
                left,
                right,
            } => interval.hi + left.horizon().max(right.horizon()),
            Formula::Eventually(i, f) | Formula::Globally(i, f) => i.hi + f.horizon(),
        }
    }

    /// Nesting depth; a lone predicate has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Predicate { .. } => 0,
            Formula::Not(f) | Formula::Eventually(_, f) | Formula::Globally(_, f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Until { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Distinct channel names in first-occurrence order.
    pub fn channels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_predicates(&mut |channel, _, _| {
            if !out.contains(&channel) {
                out.push(channel);
            }
        });
        out
    }

    fn visit_predicates<'a>(&'a self, visit: &mut impl FnMut(&'a str, Cmp, f64)) {
        match self {
            Formula::Predicate {
                channel,
                cmp,
                threshold,
            } => visit(channel, *cmp, *threshold),
            Formula::Not(f) | Formula::Eventually(_, f) | Formula::Globally(_, f) => {
                f.visit_predicates(visit)
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit_predicates(visit);
                b.visit_predicates(visit);
            }
            Formula::Until { left, right, .. } => {
                left.visit_predicates(visit);
                right.visit_predicates(visit);
            }
        }
    }

    /// Same tree with every predicate threshold replaced by `f(threshold)`.
    pub fn map_thresholds(&self, f: &impl Fn(f64) -> f64) -> Formula {
        match self {
            Formula::Predicate {
                channel,
                cmp,
                threshold,
            } => Formula::pred(channel.clone(), *cmp, f(*threshold)),
            Formula::Not(a) => Formula::not(a.map_thresholds(f)),
            Formula::And(a, b) => Formula::and(a.map_thresholds(f), b.map_thresholds(f)),
            Formula::Or(a, b) => Formula::or(a.map_thresholds(f), b.map_thresholds(f)),
            Formula::Until {
                interval,
                left,
                right,
            } => Formula::until(*interval, left.map_thresholds(f), right.map_thresholds(f)),
            Formula::Eventually(i, a) => Formula::eventually(*i, a.map_thresholds(f)),
            Formula::Globally(i, a) => Formula::globally(*i, a.map_thresholds(f)),
        }
    }
}

/// Canonical text form, accepted back by [`parse_formula`].
pub fn format_formula(f: &Formula) -> String {
    f.to_string()
}

// Precedence: `|` < `&` < `U` < prefix operators. Operands are wrapped in
// parentheses whenever leaving them bare could re-associate on parse.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Predicate {
                channel,
                cmp,
                threshold,
            } => write!(f, "{channel}{}{threshold}", cmp.symbol()),
            Formula::Not(a) => write!(f, "!({a})"),
            Formula::Or(a, b) => {
                fmt_operand(f, a, matches!(**a, Formula::Or(..) | Formula::And(..)) || is_tight(a))?;
                f.write_str(" | ")?;
                fmt_operand(f, b, matches!(**b, Formula::And(..)) || is_tight(b))
            }
            Formula::And(a, b) => {
                fmt_operand(f, a, matches!(**a, Formula::And(..)) || is_tight(a))?;
                f.write_str(" & ")?;
                fmt_operand(f, b, is_tight(b))
            }
            Formula::Until {
                interval,
                left,
                right,
            } => {
                fmt_operand(f, left, is_tight(left))?;
                write!(f, " U{interval} ")?;
                fmt_operand(f, right, is_tight(right))
            }
            Formula::Eventually(i, a) => {
                write!(f, "F{i} ")?;
                fmt_operand(f, a, is_tight(a))
            }
            Formula::Globally(i, a) => {
                write!(f, "G{i} ")?;
                fmt_operand(f, a, is_tight(a))
            }
        }
    }
}

fn is_tight(f: &Formula) -> bool {
    matches!(
        f,
        Formula::Predicate { .. }
            | Formula::Not(_)
            | Formula::Eventually(..)
            | Formula::Globally(..)
    )
}

fn fmt_operand(f: &mut fmt::Formatter<'_>, operand: &Formula, bare: bool) -> fmt::Result {
    if bare {
        write!(f, "{operand}")
    } else {
        write!(f, "({operand})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: usize, hi: usize) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn interval_rejects_inverted_bounds() {
        assert_eq!(Interval::new(3, 1), Err(IntervalError { lo: 3, hi: 1 }));
        assert!(Interval::new(2, 2).is_ok());
    }

    #[test]
    fn horizon_examples() {
        assert_eq!(parse_formula("x>0.8").unwrap().horizon(), 0);
        assert_eq!(parse_formula("F[0,2] G[0,5] R>0.8").unwrap().horizon(), 7);
        assert_eq!(parse_formula("a>0 U[1,3] b>0").unwrap().horizon(), 3);
        assert_eq!(parse_formula("!(F[1,4] a>0) & b<1").unwrap().horizon(), 4);
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_formula(&Formula::pred("R", Cmp::Gt, 0.8)), "R>0.8");
        assert_eq!(
            format_formula(&Formula::not(Formula::pred("Y", Cmp::Gt, 0.8))),
            "!(Y>0.8)"
        );
        let stab = Formula::eventually(
            iv(0, 2),
            Formula::globally(iv(0, 5), Formula::pred("R", Cmp::Gt, 0.8)),
        );
        assert_eq!(format_formula(&stab), "F[0,2] G[0,5] R>0.8");
    }

    #[test]
    fn format_parenthesizes_reach_avoid() {
        let f = Formula::until(
            iv(0, 2),
            Formula::not(Formula::pred("Y", Cmp::Gt, 0.8)),
            Formula::and(
                Formula::pred("R", Cmp::Gt, 0.8),
                Formula::until(
                    iv(0, 2),
                    Formula::not(Formula::pred("W", Cmp::Gt, 0.8)),
                    Formula::pred("J", Cmp::Gt, 0.8),
                ),
            ),
        );
        let text = format_formula(&f);
        assert_eq!(text, "!(Y>0.8) U[0,2] (R>0.8 & (!(W>0.8) U[0,2] J>0.8))");
        assert_eq!(parse_formula(&text).unwrap(), f);
    }

    #[test]
    fn ground_truth_thresholds() {
        let f = parse_formula("F[0,2] (R>0.8 & !(Y>=0.8))").unwrap();
        let g = f.map_thresholds(&|_| 0.0);
        assert_eq!(format_formula(&g), "F[0,2] (R>0 & !(Y>=0))");
        assert_eq!(g.channels(), vec!["R", "Y"]);
    }
}
