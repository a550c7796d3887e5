//! Signal temporal logic: syntax, parser, and robust/Boolean monitoring.

mod ast;
mod monitor;
mod parser;
mod robustness;

pub use ast::{Atom, Expr, Formula, Interval, Relation, EQ_HALF_WIDTH};
pub use monitor::{
    boolean_trace, eval_boolean, eval_robust, eval_robust_restricted, falsified_time_set,
    robustness_trace, EvalError,
};
pub use parser::{parse, ParseError};
pub use robustness::Robustness;
