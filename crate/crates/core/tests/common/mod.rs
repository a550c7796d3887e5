//! Shared test support: an independent brute-force evaluator of the robust
//! and Boolean semantics, and seeded generators for formulas and signals.
//!
//! The evaluator follows the definition literally. Every subformula is
//! evaluated at every shift `w^{t_j}`; `until` takes the supremum, over all
//! `t` in `I` within the remaining horizon, of the minimum of the right
//! operand at `t` and the infimum of the left operand over `[0, t)`,
//! recomputed from scratch for each `t`. `ev_I f` is `true U_I f` and
//! `alw_I f` is `not ev_I not f`.

// Index loops mirror the definition on purpose.
#![allow(dead_code, clippy::needless_range_loop)]

use falsar::stl::{Atom, Expr, Formula, Interval, Relation};
use falsar::Signal;
use rand::Rng;

/// Slack for deciding whether a grid time lies in an interval.
const TIME_EPS: f64 = 1e-9;

fn expr_value(e: &Expr, w: &Signal, j: usize) -> f64 {
    match e {
        Expr::Channel(c) => w.row(j)[w.channel_index(c).expect("known channel")],
        Expr::Const(v) => *v,
        Expr::Neg(a) => -expr_value(a, w, j),
        Expr::Add(a, b) => expr_value(a, w, j) + expr_value(b, w, j),
        Expr::Sub(a, b) => expr_value(a, w, j) - expr_value(b, w, j),
        Expr::Mul(a, b) => expr_value(a, w, j) * expr_value(b, w, j),
        Expr::Abs(a) => expr_value(a, w, j).abs(),
    }
}

fn atom_margin(a: &Atom, v: f64) -> f64 {
    match a.rel {
        Relation::Gt | Relation::Ge => v - a.bound,
        Relation::Lt | Relation::Le => a.bound - v,
        // `x == c` is the band `c - 0.5 < x < c + 0.5`.
        Relation::Eq => (v - a.bound + 0.5).min(a.bound + 0.5 - v),
    }
}

fn atom_holds(a: &Atom, v: f64) -> bool {
    match a.rel {
        Relation::Gt => v > a.bound,
        Relation::Ge => v >= a.bound,
        Relation::Lt => v < a.bound,
        Relation::Le => v <= a.bound,
        Relation::Eq => (v - a.bound).abs() < 0.5,
    }
}

fn in_interval(i: &Interval, dt: f64) -> bool {
    dt >= i.lo() - TIME_EPS && dt <= i.hi() + TIME_EPS
}

fn desugar(f: &Formula) -> Formula {
    match f {
        Formula::Eventually(i, g) => Formula::until(*i, Formula::truth(), (**g).clone()),
        Formula::Always(i, g) => Formula::not(Formula::until(
            *i,
            Formula::truth(),
            Formula::not((**g).clone()),
        )),
        Formula::Implies(a, b) => Formula::or(Formula::not((**a).clone()), (**b).clone()),
        other => other.clone(),
    }
}

/// Robustness of `f` on every shift `w^{t_j}`.
pub fn robust_trace(f: &Formula, w: &Signal) -> Vec<f64> {
    let n = w.len();
    match desugar(f) {
        Formula::Atom(a) => (0..n)
            .map(|j| atom_margin(&a, expr_value(&a.expr, w, j)))
            .collect(),
        Formula::False => vec![f64::NEG_INFINITY; n],
        Formula::Not(g) => robust_trace(&g, w).into_iter().map(|r| -r).collect(),
        Formula::And(a, b) => {
            let (a, b) = (robust_trace(&a, w), robust_trace(&b, w));
            (0..n).map(|j| a[j].min(b[j])).collect()
        }
        Formula::Or(a, b) => {
            let (a, b) = (robust_trace(&a, w), robust_trace(&b, w));
            (0..n).map(|j| a[j].max(b[j])).collect()
        }
        Formula::Until(i, a, b) => {
            let (a, b) = (robust_trace(&a, w), robust_trace(&b, w));
            (0..n)
                .map(|j| {
                    let mut sup = f64::NEG_INFINITY;
                    for m in j..n {
                        if !in_interval(&i, w.time(m) - w.time(j)) {
                            continue;
                        }
                        let prefix = (j..m).map(|p| a[p]).fold(f64::INFINITY, f64::min);
                        sup = sup.max(b[m].min(prefix));
                    }
                    sup
                })
                .collect()
        }
        _ => unreachable!("desugared"),
    }
}

pub fn robust(f: &Formula, w: &Signal) -> f64 {
    robust_trace(f, w)[0]
}

/// Boolean satisfaction of `f` by every shift `w^{t_j}`.
pub fn holds_trace(f: &Formula, w: &Signal) -> Vec<bool> {
    let n = w.len();
    match desugar(f) {
        Formula::Atom(a) => (0..n)
            .map(|j| atom_holds(&a, expr_value(&a.expr, w, j)))
            .collect(),
        Formula::False => vec![false; n],
        Formula::Not(g) => holds_trace(&g, w).into_iter().map(|b| !b).collect(),
        Formula::And(a, b) => {
            let (a, b) = (holds_trace(&a, w), holds_trace(&b, w));
            (0..n).map(|j| a[j] && b[j]).collect()
        }
        Formula::Or(a, b) => {
            let (a, b) = (holds_trace(&a, w), holds_trace(&b, w));
            (0..n).map(|j| a[j] || b[j]).collect()
        }
        Formula::Until(i, a, b) => {
            let (a, b) = (holds_trace(&a, w), holds_trace(&b, w));
            (0..n)
                .map(|j| {
                    (j..n).any(|m| {
                        in_interval(&i, w.time(m) - w.time(j)) && b[m] && (j..m).all(|p| a[p])
                    })
                })
                .collect()
        }
        _ => unreachable!("desugared"),
    }
}

pub fn holds(f: &Formula, w: &Signal) -> bool {
    holds_trace(f, w)[0]
}

/// Shifts `t_j` in `I` at which `f` is strictly violated.
pub fn violated_shifts(f: &Formula, w: &Signal, i: &Interval) -> Vec<usize> {
    let r = robust_trace(f, w);
    (0..w.len())
        .filter(|&j| in_interval(i, w.time(j)) && r[j] < 0.0)
        .collect()
}

pub const CHANNELS: [&str; 2] = ["x", "y"];

/// Values on a coarse lattice so that ties and exact zero margins occur.
fn sample_value(rng: &mut impl Rng) -> f64 {
    if rng.random_bool(0.5) {
        rng.random_range(-4i32..=4) as f64
    } else {
        (rng.random_range(-40i32..=40) as f64) * 0.125
    }
}

/// Random signal over [`CHANNELS`] with 1 to `max_len` samples.
pub fn random_signal(rng: &mut impl Rng, max_len: usize) -> Signal {
    let n = rng.random_range(1..=max_len);
    let step = [1.0, 0.5, 0.25][rng.random_range(0..3)];
    let rows = (0..n)
        .map(|_| CHANNELS.iter().map(|_| sample_value(rng)).collect())
        .collect();
    Signal::from_rows(CHANNELS.iter().map(|c| c.to_string()).collect(), step, rows).unwrap()
}

fn random_expr(rng: &mut impl Rng) -> Expr {
    let x = Expr::channel(CHANNELS[rng.random_range(0..2)]);
    match rng.random_range(0..6) {
        0 => Expr::Add(Box::new(x), Box::new(Expr::channel(CHANNELS[1]))),
        1 => Expr::Abs(Box::new(x)),
        2 => Expr::Mul(Box::new(Expr::Const(2.0)), Box::new(x)),
        _ => x,
    }
}

pub fn random_interval(rng: &mut impl Rng) -> Interval {
    // Bounds on and off the sample grid, occasionally unbounded.
    let lo = (rng.random_range(0..12) as f64) * 0.5 + if rng.random_bool(0.2) { 0.3 } else { 0.0 };
    if rng.random_bool(0.15) {
        return Interval::new(lo, f64::INFINITY).unwrap();
    }
    let len = (rng.random_range(1..16) as f64) * 0.5 + if rng.random_bool(0.2) { 0.2 } else { 0.0 };
    Interval::new(lo, lo + len).unwrap()
}

pub fn random_atom(rng: &mut impl Rng) -> Formula {
    let rel = [
        Relation::Gt,
        Relation::Ge,
        Relation::Lt,
        Relation::Le,
        Relation::Eq,
    ][rng.random_range(0..5)];
    Formula::atom(random_expr(rng), rel, sample_value(rng))
}

/// Random formula of depth at most `depth` (atoms have depth 1).
pub fn random_formula(rng: &mut impl Rng, depth: usize) -> Formula {
    if depth <= 1 || rng.random_bool(0.2) {
        return if rng.random_bool(0.05) {
            Formula::False
        } else {
            random_atom(rng)
        };
    }
    let sub = |rng: &mut _| random_formula(rng, depth - 1);
    match rng.random_range(0..8) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => {
            let i = random_interval(rng);
            Formula::until(i, sub(rng), sub(rng))
        }
        5 | 6 => {
            let i = random_interval(rng);
            Formula::always(i, sub(rng))
        }
        _ => {
            let i = random_interval(rng);
            Formula::eventually(i, sub(rng))
        }
    }
}
