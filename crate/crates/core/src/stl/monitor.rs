//! Offline robust and Boolean monitoring on a signal's sample grid.
//!
//! Every operator is evaluated bottom-up into a trace holding the value of the
//! subformula at each shift `w^{t_j}`. Temporal windows are the interval
//! offsets intersected with the remaining horizon of each shift.

use std::collections::VecDeque;

use thiserror::Error;

use super::ast::{Atom, Expr, Formula, Interval};
use super::robustness::Robustness;
use crate::signal::{Signal, TimeSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("formula references unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("time set has {got} entries but the signal has {expected} samples")]
    TimeSetLength { got: usize, expected: usize },
}

/// Grid offsets `[first, last]` covered by an interval at sample spacing `step`.
/// `last` is `usize::MAX` for an unbounded interval.
pub(crate) fn window_offsets(i: &Interval, step: f64) -> (usize, usize) {
    const EPS: f64 = 1e-9;
    let first = (i.lo() / step - EPS).ceil().max(0.0) as usize;
    let last = if i.hi().is_infinite() {
        usize::MAX
    } else {
        (i.hi() / step + EPS).floor() as usize
    };
    (first, last)
}

fn expr_column(e: &Expr, w: &Signal) -> Result<Vec<f64>, EvalError> {
    let zip = |a: Vec<f64>, b: Vec<f64>, op: fn(f64, f64) -> f64| {
        a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
    };
    Ok(match e {
        Expr::Channel(c) => w
            .column(c)
            .map_err(|_| EvalError::UnknownChannel(c.clone()))?,
        Expr::Const(v) => vec![*v; w.len()],
        Expr::Neg(a) => expr_column(a, w)?.into_iter().map(|x| -x).collect(),
        Expr::Abs(a) => expr_column(a, w)?.into_iter().map(f64::abs).collect(),
        Expr::Add(a, b) => zip(expr_column(a, w)?, expr_column(b, w)?, |x, y| x + y),
        Expr::Sub(a, b) => zip(expr_column(a, w)?, expr_column(b, w)?, |x, y| x - y),
        Expr::Mul(a, b) => zip(expr_column(a, w)?, expr_column(b, w)?, |x, y| x * y),
    })
}

fn atom_trace(a: &Atom, w: &Signal) -> Result<Vec<Robustness>, EvalError> {
    Ok(expr_column(&a.expr, w)?
        .into_iter()
        .map(|v| Robustness::new(a.margin(v)))
        .collect())
}

/// Minimum over the sliding window `[j + first, j + last]` clipped to the
/// trace, for every `j`; `+inf` where the window is empty.
fn sliding_min(values: &[Robustness], first: usize, last: usize) -> Vec<Robustness> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for j in 0..n {
        let start = j.saturating_add(first);
        if start >= n {
            out.push(Robustness::POS_INF);
            continue;
        }
        let end = j.saturating_add(last).min(n - 1);
        while next <= end {
            while deque.back().is_some_and(|&b| values[b] >= values[next]) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        while deque.front().is_some_and(|&f| f < start) {
            deque.pop_front();
        }
        out.push(deque.front().map_or(Robustness::POS_INF, |&f| values[f]));
    }
    out
}

fn until_trace(
    lhs: &[Robustness],
    rhs: &[Robustness],
    first: usize,
    last: usize,
) -> Vec<Robustness> {
    let n = lhs.len();
    (0..n)
        .map(|i| {
            let mut prefix = Robustness::POS_INF;
            let mut best = Robustness::NEG_INF;
            let end = last.min(n - 1 - i);
            for m in 0..=end {
                if m >= first {
                    best = best.max(rhs[i + m].min(prefix));
                }
                prefix = prefix.min(lhs[i + m]);
            }
            best
        })
        .collect()
}

/// Robustness of `f` at every grid shift of `w`.
pub fn robustness_trace(f: &Formula, w: &Signal) -> Result<Vec<Robustness>, EvalError> {
    let n = w.len();
    Ok(match f {
        Formula::Atom(a) => atom_trace(a, w)?,
        Formula::False => vec![Robustness::NEG_INF; n],
        Formula::Not(g) => robustness_trace(g, w)?.into_iter().map(|r| -r).collect(),
        Formula::And(a, b) => {
            let (a, b) = (robustness_trace(a, w)?, robustness_trace(b, w)?);
            a.into_iter().zip(b).map(|(x, y)| x.min(y)).collect()
        }
        Formula::Or(a, b) => {
            let (a, b) = (robustness_trace(a, w)?, robustness_trace(b, w)?);
            a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect()
        }
        Formula::Implies(a, b) => {
            let (a, b) = (robustness_trace(a, w)?, robustness_trace(b, w)?);
            a.into_iter().zip(b).map(|(x, y)| (-x).max(y)).collect()
        }
        Formula::Until(i, a, b) => {
            let (first, last) = window_offsets(i, w.step());
            until_trace(
                &robustness_trace(a, w)?,
                &robustness_trace(b, w)?,
                first,
                last,
            )
        }
        Formula::Always(i, g) => {
            let (first, last) = window_offsets(i, w.step());
            sliding_min(&robustness_trace(g, w)?, first, last)
        }
        Formula::Eventually(i, g) => {
            let (first, last) = window_offsets(i, w.step());
            let neg: Vec<Robustness> = robustness_trace(g, w)?.into_iter().map(|r| -r).collect();
            sliding_min(&neg, first, last)
                .into_iter()
                .map(|r| -r)
                .collect()
        }
    })
}

/// Robustness of `f` on `w` (at time zero).
pub fn eval_robust(f: &Formula, w: &Signal) -> Result<Robustness, EvalError> {
    Ok(robustness_trace(f, w)?[0])
}

/// Boolean satisfaction of `f` at every grid shift of `w`.
pub fn boolean_trace(f: &Formula, w: &Signal) -> Result<Vec<bool>, EvalError> {
    let n = w.len();
    let window = |i: &Interval, j: usize| {
        let (first, last) = window_offsets(i, w.step());
        let start = j.saturating_add(first);
        let end = j.saturating_add(last).min(n - 1);
        (start, end)
    };
    Ok(match f {
        Formula::Atom(a) => expr_column(&a.expr, w)?
            .into_iter()
            .map(|v| a.holds(v))
            .collect(),
        Formula::False => vec![false; n],
        Formula::Not(g) => boolean_trace(g, w)?.into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => {
            let (a, b) = (boolean_trace(a, w)?, boolean_trace(b, w)?);
            a.into_iter().zip(b).map(|(x, y)| x && y).collect()
        }
        Formula::Or(a, b) => {
            let (a, b) = (boolean_trace(a, w)?, boolean_trace(b, w)?);
            a.into_iter().zip(b).map(|(x, y)| x || y).collect()
        }
        Formula::Implies(a, b) => {
            let (a, b) = (boolean_trace(a, w)?, boolean_trace(b, w)?);
            a.into_iter().zip(b).map(|(x, y)| !x || y).collect()
        }
        Formula::Until(i, a, b) => {
            let (a, b) = (boolean_trace(a, w)?, boolean_trace(b, w)?);
            (0..n)
                .map(|j| {
                    let (start, end) = window(i, j);
                    (start..=end).any(|k| b[k] && a[j..k].iter().all(|&x| x))
                })
                .collect()
        }
        Formula::Always(i, g) => {
            let g = boolean_trace(g, w)?;
            (0..n)
                .map(|j| {
                    let (start, end) = window(i, j);
                    (start..=end).all(|k| g[k])
                })
                .collect()
        }
        Formula::Eventually(i, g) => {
            let g = boolean_trace(g, w)?;
            (0..n)
                .map(|j| {
                    let (start, end) = window(i, j);
                    (start..=end).any(|k| g[k])
                })
                .collect()
        }
    })
}

/// Classical satisfaction `w |= f`.
pub fn eval_boolean(f: &Formula, w: &Signal) -> Result<bool, EvalError> {
    Ok(boolean_trace(f, w)?[0])
}

fn check_len(s: &TimeSet, w: &Signal) -> Result<(), EvalError> {
    if s.len() != w.len() {
        return Err(EvalError::TimeSetLength {
            got: s.len(),
            expected: w.len(),
        });
    }
    Ok(())
}

/// Infimum of the robustness of `psi` over the shifts `w^t`, `t` in `set`;
/// `+inf` for an empty set.
pub fn eval_robust_restricted(
    psi: &Formula,
    w: &Signal,
    set: &TimeSet,
) -> Result<Robustness, EvalError> {
    check_len(set, w)?;
    let trace = robustness_trace(psi, w)?;
    Ok(set
        .indices()
        .map(|j| trace[j])
        .fold(Robustness::POS_INF, Robustness::min))
}

/// Grid instants `t` in `interval` (within the horizon) at which `other` is
/// strictly violated, i.e. its robustness on `w^t` is negative.
pub fn falsified_time_set(
    other: &Formula,
    w: &Signal,
    interval: &Interval,
) -> Result<TimeSet, EvalError> {
    let trace = robustness_trace(other, w)?;
    let (first, last) = window_offsets(interval, w.step());
    let n = w.len();
    let mut set = TimeSet::empty(n);
    if first < n {
        for (j, rb) in trace
            .iter()
            .enumerate()
            .take(last.min(n - 1) + 1)
            .skip(first)
        {
            if rb.is_negative() {
                set.insert(j);
            }
        }
    }
    Ok(set)
}
