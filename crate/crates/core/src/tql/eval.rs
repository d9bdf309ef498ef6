//! Finite-trace semantics for bounded temporal formulas.
//!
//! With `n = trace.len() - 1`:
//! - `X φ` holds at `i` iff `i + 1 <= n` and `φ` holds at `i + 1` (strong next);
//! - `F[<=k] φ` iff `φ` holds at some `j` in `[i, min(i+k, n)]`;
//! - `G[<=k] φ` iff `φ` holds at every `j` in `[i, min(i+k, n)]`, so the
//!   window is truncated at the trace end rather than failing;
//! - `φ U[<=k] ψ` iff some `j` in that window has `ψ`, with `φ` on `[i, j)`.
//!
//! [`label`] evaluates bottom-up over every index at once. [`progress`] and
//! [`eval_final`] evaluate incrementally, one state at a time, which the
//! planner uses to carry partial-trace obligations through its search.

use thiserror::Error;

use super::ast::{Formula, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("index {index} out of range for a trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Truth value of `formula` at every index of `trace`.
pub fn label<A, V: Valuation<A>>(formula: &Formula<A>, trace: &[V]) -> Vec<bool> {
    let len = trace.len();
    match formula {
        Formula::True => vec![true; len],
        Formula::False => vec![false; len],
        Formula::Atom(a) => trace.iter().map(|s| s.holds(a)).collect(),
        Formula::Not(f) => label(f, trace).into_iter().map(|b| !b).collect(),
        Formula::And(l, r) => {
            let (l, r) = (label(l, trace), label(r, trace));
            l.iter().zip(&r).map(|(a, b)| *a && *b).collect()
        }
        Formula::Or(l, r) => {
            let (l, r) = (label(l, trace), label(r, trace));
            l.iter().zip(&r).map(|(a, b)| *a || *b).collect()
        }
        Formula::Next(f) => {
            let inner = label(f, trace);
            (0..len).map(|i| i + 1 < len && inner[i + 1]).collect()
        }
        Formula::Finally(k, f) => {
            let inner = label(f, trace);
            (0..len)
                .map(|i| inner[i..window_end(i, *k, len)].iter().any(|b| *b))
                .collect()
        }
        Formula::Globally(k, f) => {
            let inner = label(f, trace);
            (0..len)
                .map(|i| inner[i..window_end(i, *k, len)].iter().all(|b| *b))
                .collect()
        }
        Formula::Until(k, l, r) => {
            let (hold, goal) = (label(l, trace), label(r, trace));
            (0..len)
                .map(|i| until_witness(&hold, &goal, i, *k).is_some())
                .collect()
        }
    }
}

/// Exclusive end of the window `[i, min(i+k, n)]` for a trace of length `len`.
fn window_end(i: usize, k: u32, len: usize) -> usize {
    (i.saturating_add(k as usize)).min(len - 1) + 1
}

fn until_witness(hold: &[bool], goal: &[bool], i: usize, k: u32) -> Option<usize> {
    for j in i..window_end(i, k, goal.len()) {
        if goal[j] {
            return Some(j);
        }
        if !hold[j] {
            return None;
        }
    }
    None
}

/// Evaluates `formula` at index `i` of `trace`.
pub fn eval<A, V: Valuation<A>>(formula: &Formula<A>, trace: &[V], i: usize) -> Result<bool, EvalError> {
    if i >= trace.len() {
        return Err(EvalError::IndexOutOfRange {
            index: i,
            len: trace.len(),
        });
    }
    Ok(label(formula, trace)[i])
}

/// Index of the witness that makes a top-level `F` or `U` true at 0; other
/// shapes report 0 when they hold. `None` when the formula is false at 0.
pub fn earliest_match<A, V: Valuation<A>>(formula: &Formula<A>, trace: &[V]) -> Option<usize> {
    if trace.is_empty() {
        return None;
    }
    match formula {
        Formula::Finally(k, f) => {
            let inner = label(f, trace);
            (0..window_end(0, *k, trace.len())).find(|&j| inner[j])
        }
        Formula::Until(k, l, r) => {
            let (hold, goal) = (label(l, trace), label(r, trace));
            until_witness(&hold, &goal, 0, *k)
        }
        _ => label(formula, trace)[0].then_some(0),
    }
}

fn mk_not<A>(f: Formula<A>) -> Formula<A> {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(inner) => *inner,
        other => Formula::not(other),
    }
}

fn mk_and<A>(l: Formula<A>, r: Formula<A>) -> Formula<A> {
    match (l, r) {
        (Formula::False, _) | (_, Formula::False) => Formula::False,
        (Formula::True, x) | (x, Formula::True) => x,
        (l, r) => Formula::and(l, r),
    }
}

fn mk_or<A>(l: Formula<A>, r: Formula<A>) -> Formula<A> {
    match (l, r) {
        (Formula::True, _) | (_, Formula::True) => Formula::True,
        (Formula::False, x) | (x, Formula::False) => x,
        (l, r) => Formula::or(l, r),
    }
}

/// Progresses `formula` through `state`, assuming at least one more state
/// follows. The result must hold at the next index exactly when `formula`
/// holds at this one. Constants are folded, so `True` means the formula is
/// satisfied whatever comes next and `False` that it cannot be.
pub fn progress<A: Clone, V: Valuation<A>>(formula: &Formula<A>, state: &V) -> Formula<A> {
    match formula {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom(a) => {
            if state.holds(a) {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(f) => mk_not(progress(f, state)),
        Formula::And(l, r) => mk_and(progress(l, state), progress(r, state)),
        Formula::Or(l, r) => mk_or(progress(l, state), progress(r, state)),
        Formula::Next(f) => (**f).clone(),
        Formula::Finally(k, f) => {
            let now = progress(f, state);
            if *k == 0 {
                now
            } else {
                mk_or(now, Formula::Finally(k - 1, f.clone()))
            }
        }
        Formula::Globally(k, f) => {
            let now = progress(f, state);
            if *k == 0 {
                now
            } else {
                mk_and(now, Formula::Globally(k - 1, f.clone()))
            }
        }
        Formula::Until(k, l, r) => {
            let goal = progress(r, state);
            if *k == 0 {
                goal
            } else {
                let rest = mk_and(progress(l, state), Formula::Until(k - 1, l.clone(), r.clone()));
                mk_or(goal, rest)
            }
        }
    }
}

/// Evaluates `formula` on the last state of a trace.
pub fn eval_final<A, V: Valuation<A>>(formula: &Formula<A>, state: &V) -> bool {
    match formula {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => state.holds(a),
        Formula::Not(f) => !eval_final(f, state),
        Formula::And(l, r) => eval_final(l, state) && eval_final(r, state),
        Formula::Or(l, r) => eval_final(l, state) || eval_final(r, state),
        Formula::Next(_) => false,
        Formula::Finally(_, f) | Formula::Globally(_, f) => eval_final(f, state),
        Formula::Until(_, _, r) => eval_final(r, state),
    }
}

/// Evaluates at index 0 by progressing through the whole trace.
pub fn eval_by_progression<A: Clone, V: Valuation<A>>(formula: &Formula<A>, trace: &[V]) -> bool {
    let Some((last, prefix)) = trace.split_last() else {
        return false;
    };
    let mut residual = formula.clone();
    for s in prefix {
        residual = progress(&residual, s);
    }
    eval_final(&residual, last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tql::abstraction::{Proposition, PropositionSet};
    use crate::tql::parser::parse_query;

    fn trace(sets: &[&[Proposition]]) -> Vec<PropositionSet> {
        sets.iter().map(|s| s.iter().copied().collect()).collect()
    }

    fn q(text: &str) -> Formula<Proposition> {
        parse_query(text).unwrap().resolve().unwrap()
    }

    use Proposition::{InFog as A, InTunnel as B};

    #[test]
    fn globally_true_is_a_tautology() {
        let t = trace(&[&[], &[A], &[]]);
        for i in 0..3 {
            assert!(eval(&q("G[<=5] true"), &t, i).unwrap());
        }
    }

    #[test]
    fn finally_zero_is_now() {
        let t = trace(&[&[A], &[], &[A]]);
        for i in 0..3 {
            assert_eq!(eval(&q("F[<=0] InFog"), &t, i).unwrap(), t[i].contains(A));
        }
    }

    #[test]
    fn bounded_until() {
        let t = trace(&[&[A], &[A], &[B]]);
        assert!(eval(&q("InFog U[<=2] InTunnel"), &t, 0).unwrap());
        assert!(!eval(&q("InFog U[<=1] InTunnel"), &t, 0).unwrap());
        assert!(eval(&q("InFog U[<=1] InTunnel"), &t, 1).unwrap());
    }

    #[test]
    fn strong_next_and_truncated_globally() {
        let t = trace(&[&[A], &[A]]);
        assert!(!eval(&q("X InFog"), &t, 1).unwrap());
        assert!(eval(&q("X InFog"), &t, 0).unwrap());
        assert!(eval(&q("G[<=10] InFog"), &t, 0).unwrap());
    }

    #[test]
    fn out_of_range_index() {
        let t = trace(&[&[A]]);
        assert_eq!(
            eval(&q("InFog"), &t, 1),
            Err(EvalError::IndexOutOfRange { index: 1, len: 1 })
        );
    }

    #[test]
    fn earliest_witness() {
        let t = trace(&[&[], &[], &[A], &[A]]);
        assert_eq!(earliest_match(&q("F[<=5] InFog"), &t), Some(2));
        assert_eq!(earliest_match(&q("F[<=1] InFog"), &t), None);
        assert_eq!(earliest_match(&q("!InFog U[<=5] InFog"), &t), Some(2));
        assert_eq!(earliest_match(&q("!InFog & F[<=5] InFog"), &t), Some(0));
    }

    #[test]
    fn progression_folds_constants() {
        let s: PropositionSet = [A].into_iter().collect();
        assert_eq!(progress(&q("F[<=3] InFog"), &s), Formula::True);
        let empty = PropositionSet::empty();
        assert_eq!(progress(&q("F[<=3] InFog"), &empty), q("F[<=2] InFog"));
        assert_eq!(progress(&q("F[<=0] InFog"), &empty), Formula::False);
    }
}
