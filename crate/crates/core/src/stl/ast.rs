use std::fmt;

use serde::{Deserialize, Serialize};

/// Closed, non-singular time interval `[lo, hi]`; `hi` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// `None` unless `0 <= lo < hi`.
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        (lo >= 0.0 && lo.is_finite() && lo < hi && !hi.is_nan()).then_some(Self { lo, hi })
    }

    pub fn unbounded() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", num(self.lo), num(self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Gt => ">",
            Relation::Ge => ">=",
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "==",
        }
    }

    /// Relation seen from the other side: `c < e` is `e > c`.
    pub fn flipped(self) -> Self {
        match self {
            Relation::Gt => Relation::Lt,
            Relation::Ge => Relation::Le,
            Relation::Lt => Relation::Gt,
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
        }
    }
}

/// Arithmetic over one sample row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Channel(String),
    Const(f64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    pub fn channel(name: impl Into<String>) -> Self {
        Expr::Channel(name.into())
    }

    /// Channel names in order of first appearance.
    pub fn channels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_channels(&mut out);
        out
    }

    fn collect_channels<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Channel(c) => {
                if !out.contains(&c.as_str()) {
                    out.push(c);
                }
            }
            Expr::Const(_) => {}
            Expr::Neg(a) | Expr::Abs(a) => a.collect_channels(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_channels(out);
                b.collect_channels(out);
            }
        }
    }

    pub fn mentions(&self, channel: &str) -> bool {
        self.channels().contains(&channel)
    }

    /// Evaluates against one row; `index` maps a channel name to its column.
    pub(crate) fn eval_row(&self, row: &[f64], index: &dyn Fn(&str) -> usize) -> f64 {
        match self {
            Expr::Channel(c) => row[index(c)],
            Expr::Const(v) => *v,
            Expr::Neg(a) => -a.eval_row(row, index),
            Expr::Add(a, b) => a.eval_row(row, index) + b.eval_row(row, index),
            Expr::Sub(a, b) => a.eval_row(row, index) - b.eval_row(row, index),
            Expr::Mul(a, b) => a.eval_row(row, index) * b.eval_row(row, index),
            Expr::Abs(a) => a.eval_row(row, index).abs(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Channel(_) | Expr::Const(_) | Expr::Abs(_) => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            write!(f, "(")?;
        }
        match self {
            Expr::Channel(c) => write!(f, "{c}")?,
            Expr::Const(v) if *v < 0.0 => write!(f, "({})", num(*v))?,
            Expr::Const(v) => write!(f, "{}", num(*v))?,
            Expr::Neg(a) => {
                write!(f, "-")?;
                if matches!(**a, Expr::Const(_)) {
                    write!(f, "({a})")?;
                } else {
                    a.fmt_prec(f, 4)?;
                }
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " * ")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Abs(a) => {
                write!(f, "abs(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Atomic proposition `expr REL bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub expr: Expr,
    pub rel: Relation,
    pub bound: f64,
}

/// Half-width of the band an equality atom accepts around its constant.
pub const EQ_HALF_WIDTH: f64 = 0.5;

impl Atom {
    pub fn new(expr: Expr, rel: Relation, bound: f64) -> Self {
        Self { expr, rel, bound }
    }

    /// Signed margin of the atom at a given expression value. `==` is read as
    /// `bound - 0.5 < value < bound + 0.5`.
    pub fn margin(&self, value: f64) -> f64 {
        match self.rel {
            Relation::Gt | Relation::Ge => value - self.bound,
            Relation::Lt | Relation::Le => self.bound - value,
            Relation::Eq => {
                (value - self.bound + EQ_HALF_WIDTH).min(self.bound + EQ_HALF_WIDTH - value)
            }
        }
    }

    pub fn holds(&self, value: f64) -> bool {
        match self.rel {
            Relation::Gt => value > self.bound,
            Relation::Ge => value >= self.bound,
            Relation::Lt => value < self.bound,
            Relation::Le => value <= self.bound,
            Relation::Eq => {
                value > self.bound - EQ_HALF_WIDTH && value < self.bound + EQ_HALF_WIDTH
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.expr, self.rel.symbol(), num(self.bound))
    }
}

/// STL formula.
///
/// `Always` and `Eventually` are kept as nodes so the monitor can evaluate
/// them with sliding windows; their meaning is the usual abbreviation
/// `ev_I f = true U_I f`, `alw_I f = not ev_I not f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    Atom(Atom),
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    Always(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
}

impl Formula {
    pub fn atom(expr: Expr, rel: Relation, bound: f64) -> Self {
        Formula::Atom(Atom::new(expr, rel, bound))
    }

    pub fn truth() -> Self {
        Formula::Not(Box::new(Formula::False))
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

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn until(i: Interval, a: Formula, b: Formula) -> Self {
        Formula::Until(i, Box::new(a), Box::new(b))
    }

    pub fn always(i: Interval, f: Formula) -> Self {
        Formula::Always(i, Box::new(f))
    }

    pub fn eventually(i: Interval, f: Formula) -> Self {
        Formula::Eventually(i, Box::new(f))
    }

    /// Channels referenced by any atom, in order of first appearance.
    pub fn channels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.visit_atoms(&mut |a| {
            for c in a.expr.channels() {
                if !out.iter().any(|o| o == c) {
                    out.push(c.to_string());
                }
            }
        });
        out
    }

    pub fn visit_atoms(&self, visit: &mut impl FnMut(&Atom)) {
        match self {
            Formula::Atom(a) => visit(a),
            Formula::False => {}
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => {
                f.visit_atoms(visit)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(_, a, b) => {
                a.visit_atoms(visit);
                b.visit_atoms(visit);
            }
        }
    }

    /// Rebuilds the formula with every atom passed through `f`.
    pub fn try_map_atoms<E>(
        &self,
        f: &mut impl FnMut(&Atom) -> Result<Atom, E>,
    ) -> Result<Formula, E> {
        Ok(match self {
            Formula::Atom(a) => Formula::Atom(f(a)?),
            Formula::False => Formula::False,
            Formula::Not(g) => Formula::not(g.try_map_atoms(f)?),
            Formula::And(a, b) => Formula::and(a.try_map_atoms(f)?, b.try_map_atoms(f)?),
            Formula::Or(a, b) => Formula::or(a.try_map_atoms(f)?, b.try_map_atoms(f)?),
            Formula::Implies(a, b) => Formula::implies(a.try_map_atoms(f)?, b.try_map_atoms(f)?),
            Formula::Until(i, a, b) => Formula::until(*i, a.try_map_atoms(f)?, b.try_map_atoms(f)?),
            Formula::Always(i, g) => Formula::always(*i, g.try_map_atoms(f)?),
            Formula::Eventually(i, g) => Formula::eventually(*i, g.try_map_atoms(f)?),
        })
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::False => 1,
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => 1 + f.depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Until(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            write!(f, "(")?;
        }
        match self {
            Formula::Atom(a) => write!(f, "({a})")?,
            Formula::False => write!(f, "false")?,
            Formula::Not(g) => {
                write!(f, "not ")?;
                g.fmt_prec(f, 5)?;
            }
            Formula::And(a, b) => {
                a.fmt_prec(f, 3)?;
                write!(f, " and ")?;
                b.fmt_prec(f, 4)?;
            }
            Formula::Or(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " or ")?;
                b.fmt_prec(f, 3)?;
            }
            Formula::Implies(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, 1)?;
            }
            Formula::Until(i, a, b) => {
                a.fmt_prec(f, 5)?;
                write!(f, " until_{i} ")?;
                b.fmt_prec(f, 5)?;
            }
            Formula::Always(i, g) => {
                write!(f, "alw_{i} ")?;
                g.fmt_prec(f, 5)?;
            }
            Formula::Eventually(i, g) => {
                write!(f, "ev_{i} ")?;
                g.fmt_prec(f, 5)?;
            }
        }
        if p < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Prints in the concrete syntax accepted by [`crate::stl::parse`].
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}
