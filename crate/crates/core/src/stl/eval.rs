use super::{Formula, Signal};
use crate::error::{Error, Result};

/// Space robustness of `f` on `signal` at sample `t`.
///
/// Strict and non-strict comparisons share the margin `value - threshold`
/// (or its negation for upper bounds); strictness only matters for
/// [`satisfies`].
pub fn robustness(signal: &Signal, f: &Formula, t: usize) -> Result<f64> {
    check(signal, f, t)?;
    Ok(row(signal, f)[t])
}

/// Robustness of `f` at every sample where it is defined, i.e. for
/// `t = 0..=len - 1 - horizon(f)`.
pub fn robustness_row(signal: &Signal, f: &Formula) -> Result<Vec<f64>> {
    check(signal, f, 0)?;
    Ok(row(signal, f))
}

/// Boolean satisfaction of `f` on `signal` at sample `t`, evaluated directly
/// from the truth semantics without going through robustness.
pub fn satisfies(signal: &Signal, f: &Formula, t: usize) -> Result<bool> {
    check(signal, f, t)?;
    Ok(holds(signal, f, t))
}

fn check(signal: &Signal, f: &Formula, t: usize) -> Result<()> {
    for channel in f.channels() {
        if signal.channel(channel).is_none() {
            return Err(Error::UnknownChannel(channel.to_owned()));
        }
    }
    let horizon = f.horizon();
    let last = t + horizon;
    if last >= signal.len() {
        return Err(Error::SignalTooShort {
            t,
            horizon,
            last,
            len: signal.len(),
        });
    }
    Ok(())
}

// Each sub-formula is evaluated once into a row indexed by time; the row for
// `g` has `len - horizon(g)` entries. Callers must have run `check`.
fn row(signal: &Signal, f: &Formula) -> Vec<f64> {
    let n = signal.len() - f.horizon();
    match f {
        Formula::Predicate {
            channel,
            cmp,
            threshold,
        } => {
            let values = signal.channel(channel).expect("checked channel");
            values[..n]
                .iter()
                .map(|v| {
                    if cmp.is_lower_bound() {
                        v - threshold
                    } else {
                        threshold - v
                    }
                })
                .collect()
        }
        Formula::Not(a) => row(signal, a).into_iter().map(|r| -r).collect(),
        Formula::And(a, b) => {
            let (ra, rb) = (row(signal, a), row(signal, b));
            (0..n).map(|t| ra[t].min(rb[t])).collect()
        }
        Formula::Or(a, b) => {
            let (ra, rb) = (row(signal, a), row(signal, b));
            (0..n).map(|t| ra[t].max(rb[t])).collect()
        }
        Formula::Eventually(i, a) => {
            let ra = row(signal, a);
            (0..n)
                .map(|t| {
                    ra[t + i.lo()..=t + i.hi()]
                        .iter()
                        .copied()
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        }
        Formula::Globally(i, a) => {
            let ra = row(signal, a);
            (0..n)
                .map(|t| {
                    ra[t + i.lo()..=t + i.hi()]
                        .iter()
                        .copied()
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        }
        Formula::Until {
            interval,
            left,
            right,
        } => {
            let (rl, rr) = (row(signal, left), row(signal, right));
            (0..n)
                .map(|t| {
                    let mut best = f64::NEG_INFINITY;
                    let mut left_min = f64::INFINITY;
                    for tp in t..=t + interval.hi() {
                        left_min = left_min.min(rl[tp]);
                        if tp >= t + interval.lo() {
                            best = best.max(rr[tp].min(left_min));
                        }
                    }
                    best
                })
                .collect()
        }
    }
}

fn holds(signal: &Signal, f: &Formula, t: usize) -> bool {
    match f {
        Formula::Predicate {
            channel,
            cmp,
            threshold,
        } => cmp.holds(signal.channel(channel).expect("checked channel")[t], *threshold),
        Formula::Not(a) => !holds(signal, a, t),
        Formula::And(a, b) => holds(signal, a, t) && holds(signal, b, t),
        Formula::Or(a, b) => holds(signal, a, t) || holds(signal, b, t),
        Formula::Eventually(i, a) => (t + i.lo()..=t + i.hi()).any(|tp| holds(signal, a, tp)),
        Formula::Globally(i, a) => (t + i.lo()..=t + i.hi()).all(|tp| holds(signal, a, tp)),
        Formula::Until {
            interval,
            left,
            right,
        } => (t + interval.lo()..=t + interval.hi()).any(|tp| {
            holds(signal, right, tp) && (t..=tp).all(|tpp| holds(signal, left, tpp))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_formula;

    fn eval(text: &str, channels: &[(&str, &[f64])], t: usize) -> f64 {
        let signal = Signal::new(channels.iter().map(|(n, v)| (*n, v.to_vec()))).unwrap();
        robustness(&signal, &parse_formula(text).unwrap(), t).unwrap()
    }

    #[test]
    fn constant_predicate() {
        assert_eq!(eval("x>0", &[("x", &[0.5])], 0), 0.5);
        assert_eq!(eval("x<=0", &[("x", &[0.5])], 0), -0.5);
    }

    #[test]
    fn eventually_window() {
        let r = eval("F[0,2] x>0.8", &[("x", &[0.1, 0.5, 0.9])], 0);
        assert!((r - 0.1).abs() < 1e-12, "{r}");
    }

    #[test]
    fn until_brute_force_value() {
        // t'=0: min(0-0.5, 0.4) = -0.5; t'=1: min(-0.5, 0.4) = -0.5;
        // t'=2: min(0.2, min(0.4, 0.4, -0.3)) = -0.3.
        let r = eval(
            "a>0.5 U[0,2] b>0.5",
            &[("a", &[0.9, 0.9, 0.2]), ("b", &[0.0, 0.0, 0.7])],
            0,
        );
        assert!((r + 0.3).abs() < 1e-12, "{r}");
    }

    #[test]
    fn boolean_examples() {
        let ones = Signal::single("x", vec![1.0; 3]).unwrap();
        assert!(satisfies(&ones, &parse_formula("x>0").unwrap(), 0).unwrap());
        let zeros = Signal::single("x", vec![0.0; 3]).unwrap();
        assert!(!satisfies(&zeros, &parse_formula("F[0,2] x>0.5").unwrap(), 0).unwrap());
    }

    #[test]
    fn strictness_only_affects_boolean() {
        let s = Signal::single("x", vec![0.5]).unwrap();
        let gt = parse_formula("x>0.5").unwrap();
        let ge = parse_formula("x>=0.5").unwrap();
        assert_eq!(robustness(&s, &gt, 0).unwrap(), 0.0);
        assert_eq!(robustness(&s, &ge, 0).unwrap(), 0.0);
        assert!(!satisfies(&s, &gt, 0).unwrap());
        assert!(satisfies(&s, &ge, 0).unwrap());
    }

    #[test]
    fn short_signal_is_an_error() {
        let s = Signal::single("x", vec![0.0; 3]).unwrap();
        let f = parse_formula("F[0,3] x>0").unwrap();
        match robustness(&s, &f, 0) {
            Err(Error::SignalTooShort { last, len, .. }) => {
                assert_eq!((last, len), (3, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(robustness(&s, &parse_formula("F[0,1] x>0").unwrap(), 2).is_err());
        assert!(satisfies(&s, &f, 0).is_err());
    }

    #[test]
    fn unknown_channel_is_an_error() {
        let s = Signal::single("x", vec![0.0]).unwrap();
        assert!(matches!(
            robustness(&s, &parse_formula("y>0").unwrap(), 0),
            Err(Error::UnknownChannel(c)) if c == "y"
        ));
    }

    #[test]
    fn row_matches_pointwise() {
        let s = Signal::new([
            ("a", vec![0.3, -0.2, 0.9, 0.4, 0.1, 0.7]),
            ("b", vec![-0.5, 0.6, 0.2, -0.1, 0.8, 0.0]),
        ])
        .unwrap();
        let f = parse_formula("G[0,1] (a>0 | F[1,2] b>0.1)").unwrap();
        let r = robustness_row(&s, &f).unwrap();
        assert_eq!(r.len(), s.len() - f.horizon());
        for (t, v) in r.iter().enumerate() {
            assert_eq!(*v, robustness(&s, &f, t).unwrap());
        }
    }
}
