//! Black-box falsification of hybrid-system models against STL safety
//! specifications.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`]: sampled, time-bounded signals,
//! * [`stl`]: formulas, parser and robustness monitor,
//! * [`systems`]: the black-box model abstraction and built-in surrogates,
//! * [`hillclimb`]: input parameterization and stochastic optimizers,
//! * [`bandit`]: arm bookkeeping, UCB1 / epsilon-greedy and the
//!   hill-climbing-gain reward,
//! * [`falsify`]: the plain and bandit-guided falsification drivers,
//! * [`harness`]: multi-trial experiments and CSV reporting.

pub mod bandit;
pub mod falsify;
pub mod harness;
pub mod hillclimb;
pub mod signal;
pub mod stl;
pub mod systems;

pub use signal::{Signal, SignalError, TimeSet};
