//! Input parameterization and the stochastic optimizers used for hill
//! climbing.
//!
//! An input signal is encoded as a point in a box: each input channel gets
//! `n_cp` control values holding over equal subintervals of `[0, T]`.
//! Optimizers work on that box through an ask/tell interface
//! ([`Optimizer::suggest`] / [`Optimizer::observe`]) and only ever compare
//! robustness values with each other, except for simulated annealing's
//! acceptance test.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{grid_len, Signal};
use crate::stl::Robustness;
use crate::systems::{InputChannel, SystemModel};

pub const DEFAULT_CONTROL_POINTS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum HillClimbError {
    #[error("point has {got} coordinates, the input space has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("coordinate {index} = {value} is outside [{lo}, {hi}]")]
    OutOfBox {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid input space: {0}")]
    BadSpace(String),
    #[error("unknown optimizer `{0}` (expected cmaes, anneal or random)")]
    UnknownKind(String),
}

/// Piecewise-constant parameterization of a model's input signals.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpace {
    channels: Vec<InputChannel>,
    n_cp: usize,
    horizon: f64,
    step: f64,
}

impl InputSpace {
    pub fn new(
        channels: Vec<InputChannel>,
        n_cp: usize,
        horizon: f64,
        step: f64,
    ) -> Result<Self, HillClimbError> {
        if n_cp == 0 {
            return Err(HillClimbError::BadSpace(
                "need at least one control point".into(),
            ));
        }
        if let Some(c) = channels
            .iter()
            .find(|c| c.lo.partial_cmp(&c.hi) != Some(std::cmp::Ordering::Less))
        {
            return Err(HillClimbError::BadSpace(format!(
                "channel `{}` has empty range [{}, {}]",
                c.name, c.lo, c.hi
            )));
        }
        if !(step > 0.0 && horizon >= 0.0) {
            return Err(HillClimbError::BadSpace(format!(
                "horizon {horizon}, step {step}"
            )));
        }
        Ok(Self {
            channels,
            n_cp,
            horizon,
            step,
        })
    }

    pub fn for_model(m: &dyn SystemModel, n_cp: usize) -> Result<Self, HillClimbError> {
        Self::new(m.inputs().to_vec(), n_cp, m.horizon(), m.step())
    }

    pub fn control_points(&self) -> usize {
        self.n_cp
    }

    pub fn dim(&self) -> usize {
        self.channels.len() * self.n_cp
    }

    /// Per-coordinate bounds. Coordinates are channel-major: all control
    /// values of the first channel, then the second, and so on.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.channels
            .iter()
            .flat_map(|c| std::iter::repeat_n((c.lo, c.hi), self.n_cp))
            .collect()
    }

    pub fn check(&self, x: &[f64]) -> Result<(), HillClimbError> {
        if x.len() != self.dim() {
            return Err(HillClimbError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (index, (&value, (lo, hi))) in x.iter().zip(self.bounds()).enumerate() {
            if !(value >= lo && value <= hi) {
                return Err(HillClimbError::OutOfBox {
                    index,
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Expands a point of the box into an input signal on the model grid.
    pub fn decode(&self, x: &[f64]) -> Result<Signal, HillClimbError> {
        self.check(x)?;
        let rows = grid_len(self.horizon, self.step);
        let last = rows - 1;
        let columns = (0..self.channels.len())
            .map(|c| {
                let cps = &x[c * self.n_cp..(c + 1) * self.n_cp];
                (0..rows)
                    .map(|j| {
                        let seg = (j * self.n_cp)
                            .checked_div(last)
                            .map_or(0, |s| s.min(self.n_cp - 1));
                        cps[seg]
                    })
                    .collect()
            })
            .collect();
        let names = self.channels.iter().map(|c| c.name.clone()).collect();
        Signal::from_columns(names, self.step, columns)
            .map_err(|e| HillClimbError::BadSpace(e.to_string()))
    }
}

/// Append-only log of evaluated points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    entries: Vec<(Vec<f64>, Robustness)>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: Vec<f64>, rb: Robustness) {
        self.entries.push((x, rb));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Vec<f64>, Robustness)] {
        &self.entries
    }

    /// Lowest robustness seen; the earliest entry wins ties.
    pub fn best(&self) -> Option<&(Vec<f64>, Robustness)> {
        self.entries.iter().fold(None, |best, e| match best {
            Some(b) if b.1 <= e.1 => Some(b),
            _ => Some(e),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    #[serde(alias = "cmaes")]
    CmaesLite,
    Anneal,
    Random,
}

impl FromStr for OptimizerKind {
    type Err = HillClimbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cmaes" | "cmaes-lite" => Ok(Self::CmaesLite),
            "anneal" => Ok(Self::Anneal),
            "random" => Ok(Self::Random),
            other => Err(HillClimbError::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CmaesLite => "cmaes",
            Self::Anneal => "anneal",
            Self::Random => "random",
        })
    }
}

/// Population size of the evolution strategy.
pub const PARTICLES: usize = 10;
/// Moves per particle and generation.
pub const MOVES: usize = 3;
/// Particles whose displacement shapes the diagonal covariance.
const ELITE: usize = 5;
const INITIAL_SCALE: f64 = 0.3;
/// Strength of the per-generation success rule; a generation without a
/// single improvement shrinks the step size by `exp(-ADAPT / 4)`.
const ADAPT: f64 = 3.0;
/// Restart once every step size is below this fraction of its range.
const RESTART_SCALE: f64 = 1e-3;

const ANNEAL_BATCH: usize = 10;
const ANNEAL_STEP: f64 = 0.1;
const ANNEAL_COOLING: f64 = 0.95;
const RANDOM_BATCH: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Particle {
    x: Vec<f64>,
    value: Robustness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum State {
    /// Simplified evolution strategy: every particle starts from the mean and
    /// takes `MOVES` accept-if-better steps; the best particle becomes the
    /// next mean.
    Es {
        mean: Vec<f64>,
        mean_value: Robustness,
        sigma: f64,
        diag: Vec<f64>,
        particles: Vec<Particle>,
        accepted: usize,
        /// Index of the next move within the generation.
        cursor: usize,
    },
    Anneal {
        current: Option<Particle>,
        temperature: f64,
    },
    Random,
}

/// Ask/tell optimizer over a box. Serializable, so a run can be checkpointed
/// and replayed exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    kind: OptimizerKind,
    bounds: Vec<(f64, f64)>,
    rng: ChaCha8Rng,
    state: State,
    pending: Option<Vec<f64>>,
    incumbent: Option<Particle>,
    lowest_finite: Option<f64>,
    highest_finite: Option<f64>,
}

/// Outcome of one [`Optimizer::climb`] burst.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub best: Vec<f64>,
    pub best_rb: Robustness,
    pub evaluations: usize,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, bounds: Vec<(f64, f64)>, seed: u64) -> Self {
        Self::with_temperature(kind, bounds, seed, 1.0)
    }

    /// Like [`Optimizer::new`]; `temperature` sets the initial annealing
    /// temperature relative to the spread of observed robustness values and
    /// is ignored by the other kinds.
    pub fn with_temperature(
        kind: OptimizerKind,
        bounds: Vec<(f64, f64)>,
        seed: u64,
        temperature: f64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = match kind {
            OptimizerKind::CmaesLite => {
                let mean = uniform(&mut rng, &bounds);
                Self::fresh_es(mean, &bounds)
            }
            OptimizerKind::Anneal => State::Anneal {
                current: None,
                temperature,
            },
            OptimizerKind::Random => State::Random,
        };
        Self {
            kind,
            bounds,
            rng,
            state,
            pending: None,
            incumbent: None,
            lowest_finite: None,
            highest_finite: None,
        }
    }

    fn fresh_es(mean: Vec<f64>, bounds: &[(f64, f64)]) -> State {
        State::Es {
            particles: (0..PARTICLES)
                .map(|_| Particle {
                    x: mean.clone(),
                    value: Robustness::POS_INF,
                })
                .collect(),
            mean,
            mean_value: Robustness::POS_INF,
            sigma: 1.0,
            diag: bounds
                .iter()
                .map(|(lo, hi)| INITIAL_SCALE * (hi - lo))
                .collect(),
            accepted: 0,
            cursor: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Evaluations that make up one natural burst of this optimizer.
    pub fn batch_size(&self) -> usize {
        match self.kind {
            OptimizerKind::CmaesLite => PARTICLES * MOVES,
            OptimizerKind::Anneal => ANNEAL_BATCH,
            OptimizerKind::Random => RANDOM_BATCH,
        }
    }

    /// Best point observed so far with its robustness value.
    pub fn incumbent(&self) -> Option<(&[f64], f64)> {
        self.incumbent
            .as_ref()
            .map(|p| (p.x.as_slice(), p.value.value()))
    }

    /// Next candidate; always inside the box.
    pub fn suggest(&mut self) -> Vec<f64> {
        let x = match &self.state {
            State::Es {
                sigma,
                diag,
                particles,
                cursor,
                ..
            } => {
                let from = particles[cursor % PARTICLES].x.clone();
                let scale: Vec<f64> = diag.iter().map(|d| sigma * d).collect();
                self.perturb(&from, &scale)
            }
            State::Anneal { current: None, .. } | State::Random => {
                uniform(&mut self.rng, &self.bounds)
            }
            State::Anneal {
                current: Some(c), ..
            } => {
                let from = c.x.clone();
                let scale: Vec<f64> = self
                    .bounds
                    .iter()
                    .map(|(lo, hi)| ANNEAL_STEP * (hi - lo))
                    .collect();
                self.perturb(&from, &scale)
            }
        };
        self.pending = Some(x.clone());
        x
    }

    fn perturb(&mut self, from: &[f64], scale: &[f64]) -> Vec<f64> {
        from.iter()
            .zip(scale)
            .zip(&self.bounds)
            .map(|((&v, &s), &(lo, hi))| {
                let z: f64 = self.rng.sample(StandardNormal);
                (v + s * z).clamp(lo, hi)
            })
            .collect()
    }

    /// Finite stand-in for a robustness value: infinities are mapped one
    /// spread beyond the finite values seen so far. Comparisons use the raw
    /// extended reals, where `+inf` already ranks last; the cap only matters
    /// where differences are taken.
    fn capped(&self, v: f64) -> f64 {
        if v.is_finite() {
            return v;
        }
        let (lo, hi) = match (self.lowest_finite, self.highest_finite) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => (0.0, 0.0),
        };
        let spread = if hi > lo { hi - lo } else { 1.0 };
        if v > 0.0 {
            hi + spread
        } else {
            lo - spread
        }
    }

    /// Records the robustness of the last suggestion `x`.
    pub fn observe(&mut self, x: &[f64], rb: Robustness) {
        debug_assert_eq!(
            self.pending.as_deref(),
            Some(x),
            "observe without matching suggest"
        );
        self.pending = None;
        let value = rb;
        if rb.is_finite() {
            let v = rb.value();
            self.lowest_finite = Some(self.lowest_finite.map_or(v, |l| l.min(v)));
            self.highest_finite = Some(self.highest_finite.map_or(v, |h| h.max(v)));
        }
        let point = Particle {
            x: x.to_vec(),
            value,
        };
        if self.incumbent.as_ref().is_none_or(|b| value < b.value) {
            self.incumbent = Some(point.clone());
        }

        let spread = match (self.lowest_finite, self.highest_finite) {
            (Some(lo), Some(hi)) if hi > lo => hi - lo,
            _ => 1.0,
        };
        let worsening = match &self.state {
            State::Anneal {
                current: Some(c), ..
            } => self.capped(value.value()) - self.capped(c.value.value()),
            _ => 0.0,
        };
        match &mut self.state {
            State::Es {
                particles,
                accepted,
                cursor,
                ..
            } => {
                let p = &mut particles[*cursor % PARTICLES];
                if value < p.value {
                    if p.value.is_finite() {
                        *accepted += 1;
                    }
                    *p = point;
                }
                *cursor += 1;
                if *cursor == PARTICLES * MOVES {
                    self.end_generation();
                }
            }
            State::Anneal {
                current,
                temperature,
            } => {
                let accept = match current {
                    None => true,
                    Some(c) if value < c.value => true,
                    Some(_) => {
                        *temperature > 0.0 && {
                            let u: f64 = self.rng.random();
                            u < (-worsening / (*temperature * spread)).exp()
                        }
                    }
                };
                if accept {
                    *current = Some(point);
                }
                *temperature *= ANNEAL_COOLING;
            }
            State::Random => {}
        }
    }

    fn end_generation(&mut self) {
        let State::Es {
            mean,
            mean_value,
            sigma,
            diag,
            particles,
            accepted,
            cursor,
        } = &mut self.state
        else {
            unreachable!()
        };
        let rate = *accepted as f64 / (PARTICLES * MOVES) as f64;

        // Rank particles by value, lowest index first among ties.
        let mut order: Vec<usize> = (0..PARTICLES).collect();
        order.sort_by(|&a, &b| {
            particles[a]
                .value
                .cmp_total(&particles[b].value)
                .then(a.cmp(&b))
        });

        // Shape of the diagonal from the elite displacements, normalized so
        // that the overall step size is left to the success rule.
        let mut v: Vec<f64> = (0..diag.len())
            .map(|d| {
                let s = *sigma * diag[d];
                let mean_sq = order[..ELITE]
                    .iter()
                    .map(|&i| ((particles[i].x[d] - mean[d]) / s).powi(2))
                    .sum::<f64>()
                    / ELITE as f64;
                mean_sq + 1e-12
            })
            .collect();
        let avg = v.iter().sum::<f64>() / v.len().max(1) as f64;
        for (d, vd) in diag.iter_mut().zip(&mut v) {
            *d *= (0.8 + 0.2 * *vd / avg).sqrt();
        }

        // One-fifth success rule.
        *sigma *= (ADAPT * (rate - 0.2) / 0.8).exp();
        for (d, (lo, hi)) in diag.iter_mut().zip(&self.bounds) {
            let cap = hi - lo;
            if *sigma * *d > cap {
                *d = cap / *sigma;
            }
        }

        let best = &particles[order[0]];
        if best.value < *mean_value {
            *mean = best.x.clone();
            *mean_value = best.value;
        }
        for p in particles.iter_mut() {
            p.x = mean.clone();
            p.value = *mean_value;
        }
        *accepted = 0;
        *cursor = 0;

        let collapsed = diag
            .iter()
            .zip(&self.bounds)
            .all(|(d, (lo, hi))| *sigma * d < RESTART_SCALE * (hi - lo));
        if collapsed {
            let restart = uniform(&mut self.rng, &self.bounds);
            self.state = Self::fresh_es(restart, &self.bounds);
        }
    }

    /// Runs one burst of at most `min(limit, batch_size)` evaluations and
    /// returns its best point. The burst ends early after the first negative
    /// robustness.
    pub fn climb<E>(
        &mut self,
        limit: usize,
        mut eval: impl FnMut(&[f64]) -> Result<Robustness, E>,
    ) -> Result<Option<Batch>, E> {
        let mut out: Option<Batch> = None;
        for n in 1..=limit.min(self.batch_size()) {
            let x = self.suggest();
            let rb = eval(&x)?;
            self.observe(&x, rb);
            match &mut out {
                Some(b) => {
                    b.evaluations = n;
                    if rb < b.best_rb {
                        b.best = x;
                        b.best_rb = rb;
                    }
                }
                None => {
                    out = Some(Batch {
                        best: x,
                        best_rb: rb,
                        evaluations: n,
                    })
                }
            }
            if rb.is_negative() {
                break;
            }
        }
        Ok(out)
    }
}

fn uniform(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds
        .iter()
        .map(|&(lo, hi)| {
            let u: f64 = rng.random();
            (lo + u * (hi - lo)).clamp(lo, hi)
        })
        .collect()
}
