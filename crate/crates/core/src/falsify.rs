//! Falsification drivers: plain hill climbing and the bandit-guided variants
//! for conjunctive and disjunctive safety properties.
//!
//! The budget counts simulations. Optimizers run in bursts (see
//! [`Optimizer::climb`]); one burst is one iteration of a driver and, for the
//! bandit drivers, one play of the chosen arm. Every burst draws its
//! simulations from the shared budget and stops at the first falsifying
//! input.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bandit::{BanditHistory, Strategy};
use crate::hillclimb::{
    HillClimbError, InputSpace, Optimizer, OptimizerKind, DEFAULT_CONTROL_POINTS,
};
use crate::signal::Signal;
use crate::stl::{
    eval_robust, eval_robust_restricted, falsified_time_set, EvalError, Formula, Interval,
    Robustness,
};
use crate::systems::{prepare_for_formula, ModelError, SystemModel};

#[derive(Debug, Error)]
pub enum FalsifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Space(#[from] HillClimbError),
    #[error("formula references `{0}`, which the model does not output")]
    UnknownChannel(String),
    #[error("expected a {expected} safety property, got a {got} one")]
    WrongShape { expected: Shape, got: Shape },
    #[error("unknown algorithm `{0}` (expected hc, mab-ucb or mab-egreedy)")]
    UnknownAlgorithm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Conjunctive,
    Disjunctive,
    Plain,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Conjunctive => "conjunctive",
            Shape::Disjunctive => "disjunctive",
            Shape::Plain => "plain",
        })
    }
}

/// A formula together with its safety-property decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetySpec {
    pub shape: Shape,
    pub formula: Formula,
    /// Interval and operands of `alw_I (phi1 op phi2)`; `None` for plain.
    pub parts: Option<(Interval, Formula, Formula)>,
}

/// Recognizes `alw_I (a and b)` as conjunctive and `alw_I (a or b)` or
/// `alw_I (a -> b)` (read as `not a or b`) as disjunctive.
pub fn classify_spec(phi: &Formula) -> SafetySpec {
    let (shape, parts) = match phi {
        Formula::Always(i, body) => match body.as_ref() {
            Formula::And(a, b) => (Shape::Conjunctive, Some((*i, (**a).clone(), (**b).clone()))),
            Formula::Or(a, b) => (Shape::Disjunctive, Some((*i, (**a).clone(), (**b).clone()))),
            Formula::Implies(a, b) => (
                Shape::Disjunctive,
                Some((*i, Formula::not((**a).clone()), (**b).clone())),
            ),
            _ => (Shape::Plain, None),
        },
        _ => (Shape::Plain, None),
    };
    SafetySpec {
        shape,
        formula: phi.clone(),
        parts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Hc,
    MabUcb,
    MabEgreedy,
}

impl FromStr for Algorithm {
    type Err = FalsifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hc" => Ok(Algorithm::Hc),
            "mab-ucb" => Ok(Algorithm::MabUcb),
            "mab-egreedy" => Ok(Algorithm::MabEgreedy),
            other => Err(FalsifyError::UnknownAlgorithm(other.to_string())),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Hc => "hc",
            Algorithm::MabUcb => "mab-ucb",
            Algorithm::MabEgreedy => "mab-egreedy",
        })
    }
}

/// Settings shared by all drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Maximum number of simulations.
    pub budget: usize,
    pub optimizer: OptimizerKind,
    pub control_points: usize,
    pub seed: u64,
    pub timeout: Option<Duration>,
    /// Exploration rate for epsilon-greedy.
    pub mab_eps: f64,
    /// Exploration weight for UCB1.
    pub mab_c: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            budget: 300,
            optimizer: OptimizerKind::CmaesLite,
            control_points: DEFAULT_CONTROL_POINTS,
            seed: 0,
            timeout: None,
            mab_eps: 0.1,
            mab_c: 1.0,
        }
    }
}

impl SearchConfig {
    pub fn strategy(&self, algo: Algorithm) -> Option<Strategy> {
        match algo {
            Algorithm::Hc => None,
            Algorithm::MabUcb => Some(Strategy::Ucb1 { c: self.mab_c }),
            Algorithm::MabEgreedy => Some(Strategy::EpsilonGreedy { eps: self.mab_eps }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Falsified,
    BudgetExhausted,
}

/// One driver iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub k: usize,
    /// Arm played, for the bandit drivers.
    pub arm: Option<usize>,
    /// Best objective value of the iteration's burst.
    pub rb: Robustness,
    pub running_min: Robustness,
    /// Simulations used up to and including this iteration.
    pub simulations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalsificationResult {
    pub outcome: Outcome,
    /// Robustness of the original formula on the best input found.
    pub robustness: Robustness,
    pub simulations: usize,
    pub seconds: f64,
    pub timed_out: bool,
    /// Control values of the best input.
    pub best_point: Option<Vec<f64>>,
    /// The falsifying input, as `time,<inputs...>` CSV when serialized.
    #[serde(serialize_with = "signal_as_csv")]
    pub witness: Option<Signal>,
    pub trace: Vec<TraceEntry>,
}

impl FalsificationResult {
    pub fn falsified(&self) -> bool {
        self.outcome == Outcome::Falsified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result is serializable")
    }
}

fn signal_as_csv<S: Serializer>(w: &Option<Signal>, s: S) -> Result<S::Ok, S::Error> {
    match w {
        Some(sig) => s.serialize_str(&sig.to_csv_string()),
        None => s.serialize_none(),
    }
}

/// Objective values of one simulated candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Value the arm's optimizer minimizes.
    pub objective: Robustness,
    /// Robustness of the complete formula.
    pub full: Robustness,
}

/// Raw outcome of a search loop, before witnesses are turned into signals.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRun {
    pub falsified: bool,
    pub best_point: Option<Vec<f64>>,
    pub best_full: Robustness,
    pub simulations: usize,
    pub timed_out: bool,
    pub trace: Vec<TraceEntry>,
    pub bandit: Option<BanditHistory>,
}

enum Abort<E> {
    Timeout,
    Fail(E),
}

/// Tracks budget, deadline and the best candidate across bursts.
struct Tracker {
    budget: usize,
    deadline: Option<Instant>,
    simulations: usize,
    best_point: Option<Vec<f64>>,
    best_full: Robustness,
    falsifier: Option<Vec<f64>>,
    /// Smallest objective value seen since the last `start_burst`, without
    /// the stop signal folded in.
    burst_objective: Robustness,
}

impl Tracker {
    fn new(cfg: &SearchConfig) -> Self {
        Self {
            budget: cfg.budget,
            deadline: cfg.timeout.map(|t| Instant::now() + t),
            simulations: 0,
            best_point: None,
            best_full: Robustness::POS_INF,
            falsifier: None,
            burst_objective: Robustness::POS_INF,
        }
    }

    fn start_burst(&mut self) {
        self.burst_objective = Robustness::POS_INF;
    }

    fn remaining(&self) -> usize {
        self.budget - self.simulations
    }

    /// Evaluates one candidate. Returns the value handed to the optimizer;
    /// once the complete formula is falsified that value is made negative so
    /// the burst ends.
    fn evaluate<E>(
        &mut self,
        x: &[f64],
        eval: &mut impl FnMut(&[f64]) -> Result<Evaluation, E>,
    ) -> Result<Robustness, Abort<E>> {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Abort::Timeout);
        }
        let e = eval(x).map_err(Abort::Fail)?;
        self.simulations += 1;
        self.burst_objective = self.burst_objective.min(e.objective);
        if e.full < self.best_full || self.best_point.is_none() {
            self.best_full = e.full;
            self.best_point = Some(x.to_vec());
        }
        if e.full.is_negative() {
            self.falsifier.get_or_insert_with(|| x.to_vec());
            return Ok(e.objective.min(e.full));
        }
        Ok(e.objective)
    }

    fn finish(
        self,
        trace: Vec<TraceEntry>,
        timed_out: bool,
        bandit: Option<BanditHistory>,
    ) -> SearchRun {
        SearchRun {
            falsified: self.falsifier.is_some(),
            best_point: self.falsifier.or(self.best_point),
            best_full: self.best_full,
            simulations: self.simulations,
            timed_out,
            trace,
            bandit,
        }
    }
}

/// Plain hill climbing on a single objective.
pub fn search_single<E>(
    bounds: Vec<(f64, f64)>,
    cfg: &SearchConfig,
    mut eval: impl FnMut(&[f64]) -> Result<Evaluation, E>,
) -> Result<SearchRun, E> {
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer, bounds, master.random());
    let mut t = Tracker::new(cfg);
    let mut trace = Vec::new();
    let mut running_min = Robustness::POS_INF;
    while t.falsifier.is_none() && t.remaining() > 0 {
        let limit = t.remaining();
        let burst = opt.climb(limit, |x| t.evaluate(x, &mut eval));
        let batch = match burst {
            Ok(b) => b.expect("positive limit"),
            Err(Abort::Timeout) => return Ok(t.finish(trace, true, None)),
            Err(Abort::Fail(e)) => return Err(e),
        };
        running_min = running_min.min(batch.best_rb);
        trace.push(TraceEntry {
            k: trace.len() + 1,
            arm: None,
            rb: batch.best_rb,
            running_min,
            simulations: t.simulations,
        });
    }
    Ok(t.finish(trace, false, None))
}

/// Bandit-guided search over `arms` objectives. Each arm owns an optimizer
/// that only ever sees that arm's objective values.
pub fn search_bandit<E>(
    arms: usize,
    bounds: Vec<(f64, f64)>,
    strategy: Strategy,
    cfg: &SearchConfig,
    mut eval: impl FnMut(usize, &[f64]) -> Result<Evaluation, E>,
) -> Result<SearchRun, E> {
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opts: Vec<Optimizer> = (0..arms)
        .map(|_| Optimizer::new(cfg.optimizer, bounds.clone(), master.random()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(master.random());
    let mut hist = BanditHistory::new(arms);
    let mut t = Tracker::new(cfg);
    let mut trace = Vec::new();
    let mut running_min = Robustness::POS_INF;
    while t.falsifier.is_none() && t.remaining() > 0 {
        let arm = strategy.select(&hist, &mut rng);
        let limit = t.remaining();
        t.start_burst();
        let burst = opts[arm].climb(limit, |x| t.evaluate(x, &mut |x: &[f64]| eval(arm, x)));
        let batch = match burst {
            Ok(b) => b.expect("positive limit"),
            Err(Abort::Timeout) => return Ok(t.finish(trace, true, Some(hist))),
            Err(Abort::Fail(e)) => return Err(e),
        };
        // The reward comes from the arm's own objective so that it stays
        // independent of the scale of the other arms.
        hist.record(arm, t.burst_objective);
        running_min = running_min.min(batch.best_rb);
        trace.push(TraceEntry {
            k: trace.len() + 1,
            arm: Some(arm),
            rb: batch.best_rb,
            running_min,
            simulations: t.simulations,
        });
    }
    Ok(t.finish(trace, false, Some(hist)))
}

/// Simulates a decoded candidate and checks its channels against the formula.
struct Runner<'a> {
    model: &'a dyn SystemModel,
    space: InputSpace,
}

impl<'a> Runner<'a> {
    fn new(
        model: &'a dyn SystemModel,
        phi: &Formula,
        cfg: &SearchConfig,
    ) -> Result<Self, FalsifyError> {
        let outputs = model.outputs();
        if let Some(c) = phi.channels().into_iter().find(|c| !outputs.contains(c)) {
            return Err(FalsifyError::UnknownChannel(c));
        }
        let space = InputSpace::for_model(model, cfg.control_points)?;
        Ok(Self { model, space })
    }

    fn output(&self, x: &[f64]) -> Result<Signal, FalsifyError> {
        Ok(self.model.simulate(&self.space.decode(x)?)?)
    }

    /// Turns a raw run into a result, re-simulating the witness and checking
    /// it against the original formula.
    fn conclude(
        &self,
        phi: &Formula,
        run: SearchRun,
        started: Instant,
    ) -> Result<FalsificationResult, FalsifyError> {
        let mut witness = None;
        let mut robustness = run.best_full;
        if let Some(x) = &run.best_point {
            let u = self.space.decode(x)?;
            robustness = eval_robust(phi, &self.model.simulate(&u)?)?;
            if run.falsified {
                assert!(
                    robustness.is_negative(),
                    "witness does not replay: {robustness}"
                );
                witness = Some(u);
            }
        }
        Ok(FalsificationResult {
            outcome: if witness.is_some() {
                Outcome::Falsified
            } else {
                Outcome::BudgetExhausted
            },
            robustness,
            simulations: run.simulations,
            seconds: started.elapsed().as_secs_f64(),
            timed_out: run.timed_out,
            best_point: run.best_point,
            witness,
            trace: run.trace,
        })
    }
}

/// Hill-climbing falsification of `phi`.
pub fn falsify_hc(
    model: &dyn SystemModel,
    phi: &Formula,
    cfg: &SearchConfig,
) -> Result<FalsificationResult, FalsifyError> {
    let started = Instant::now();
    let runner = Runner::new(model, phi, cfg)?;
    let run = search_single(runner.space.bounds(), cfg, |x| {
        let rb = eval_robust(phi, &runner.output(x)?)?;
        Ok::<_, FalsifyError>(Evaluation {
            objective: rb,
            full: rb,
        })
    })?;
    runner.conclude(phi, run, started)
}

fn expect_shape(
    spec: &SafetySpec,
    shape: Shape,
) -> Result<(Interval, Formula, Formula), FalsifyError> {
    match &spec.parts {
        Some(parts) if spec.shape == shape => Ok(parts.clone()),
        _ => Err(FalsifyError::WrongShape {
            expected: shape,
            got: spec.shape,
        }),
    }
}

/// Bandit-guided falsification of `alw_I (phi1 and phi2)`. Arm `i`
/// minimizes the robustness of `alw_I phi_i`, which bounds the conjunction's
/// robustness from above.
pub fn falsify_mab_conj(
    model: &dyn SystemModel,
    spec: &SafetySpec,
    strategy: Strategy,
    cfg: &SearchConfig,
) -> Result<FalsificationResult, FalsifyError> {
    let started = Instant::now();
    let (i, phi1, phi2) = expect_shape(spec, Shape::Conjunctive)?;
    let runner = Runner::new(model, &spec.formula, cfg)?;
    let arms = [Formula::always(i, phi1), Formula::always(i, phi2)];
    let run = search_bandit(2, runner.space.bounds(), strategy, cfg, |arm, x| {
        let y = runner.output(x)?;
        Ok::<_, FalsifyError>(Evaluation {
            objective: eval_robust(&arms[arm], &y)?,
            full: eval_robust(&spec.formula, &y)?,
        })
    })?;
    runner.conclude(&spec.formula, run, started)
}

/// Objective of arm `arm` for a disjunctive property on output `y`: the
/// robustness of `phi_arm` restricted to the instants in `I` where the other
/// disjunct is violated, or the complete formula's robustness when there are
/// no such instants.
pub fn disjunctive_objective(
    spec_formula: &Formula,
    interval: &Interval,
    disjuncts: [&Formula; 2],
    arm: usize,
    y: &Signal,
) -> Result<Evaluation, EvalError> {
    let full = eval_robust(spec_formula, y)?;
    let set = falsified_time_set(disjuncts[1 - arm], y, interval)?;
    let objective = if set.is_empty() {
        full
    } else {
        eval_robust_restricted(disjuncts[arm], y, &set)?
    };
    Ok(Evaluation { objective, full })
}

/// Bandit-guided falsification of `alw_I (phi1 or phi2)` using restricted
/// robustness.
pub fn falsify_mab_disj(
    model: &dyn SystemModel,
    spec: &SafetySpec,
    strategy: Strategy,
    cfg: &SearchConfig,
) -> Result<FalsificationResult, FalsifyError> {
    let started = Instant::now();
    let (i, phi1, phi2) = expect_shape(spec, Shape::Disjunctive)?;
    let runner = Runner::new(model, &spec.formula, cfg)?;
    let run = search_bandit(2, runner.space.bounds(), strategy, cfg, |arm, x| {
        let y = runner.output(x)?;
        Ok::<_, FalsifyError>(disjunctive_objective(
            &spec.formula,
            &i,
            [&phi1, &phi2],
            arm,
            &y,
        )?)
    })?;
    runner.conclude(&spec.formula, run, started)
}

/// Runs `algo` on `phi`, adding any derived delta channels the formula needs.
/// The bandit algorithms fall back to plain hill climbing on formulas that are
/// neither conjunctive nor disjunctive safety properties.
pub fn falsify(
    model: Arc<dyn SystemModel>,
    phi: &Formula,
    algo: Algorithm,
    cfg: &SearchConfig,
) -> Result<FalsificationResult, FalsifyError> {
    let model = prepare_for_formula(model, phi)?;
    let spec = classify_spec(phi);
    match (cfg.strategy(algo), spec.shape) {
        (None, _) | (Some(_), Shape::Plain) => falsify_hc(model.as_ref(), phi, cfg),
        (Some(s), Shape::Conjunctive) => falsify_mab_conj(model.as_ref(), &spec, s, cfg),
        (Some(s), Shape::Disjunctive) => falsify_mab_disj(model.as_ref(), &spec, s, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse;
    use crate::systems::{load_model, CarModel, ModelParams};

    fn cfg(budget: usize, seed: u64) -> SearchConfig {
        SearchConfig {
            budget,
            seed,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn classification() {
        let s = classify_spec(&parse("alw_[0,30](gear==4 -> speed>35)").unwrap());
        assert_eq!(s.shape, Shape::Disjunctive);
        let (_, p1, p2) = s.parts.unwrap();
        assert_eq!(p1, parse("not(gear == 4)").unwrap());
        assert_eq!(p2, parse("speed > 35").unwrap());

        let s = classify_spec(&parse("alw_[0,30](speed<135 and rpm<4780)").unwrap());
        assert_eq!(s.shape, Shape::Conjunctive);
        assert_eq!(
            classify_spec(&parse("ev_[0,5](x>0)").unwrap()).shape,
            Shape::Plain
        );

        let implies = Formula::always(
            Interval::new(0.0, 1.0).unwrap(),
            Formula::implies(parse("a > 0").unwrap(), parse("b > 0").unwrap()),
        );
        let s = classify_spec(&implies);
        assert_eq!(s.shape, Shape::Disjunctive);
        assert_eq!(s.parts.unwrap().1, parse("not (a > 0)").unwrap());
    }

    #[test]
    fn rigged_model_falsified_at_first_simulation() {
        let params: ModelParams = [("r".to_string(), 3.0)].into_iter().collect();
        let m = load_model("synthetic", &params).unwrap();
        let phi = parse("alw_[0,10](y2 > 0)").unwrap();
        let r = falsify_hc(m.as_ref(), &phi, &cfg(50, 1)).unwrap();
        assert!(r.falsified());
        assert_eq!(r.simulations, 1);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn unfalsifiable_exhausts_budget() {
        let phi = parse("alw_[0,30](speed > -1)").unwrap();
        let r = falsify_hc(&CarModel::default(), &phi, &cfg(60, 2)).unwrap();
        assert_eq!(r.outcome, Outcome::BudgetExhausted);
        assert_eq!(r.simulations, 60);
        assert!(r.trace.iter().all(|e| e.rb.value() > 0.0));
        assert!(r.witness.is_none());
    }

    #[test]
    fn zero_budget() {
        let spec = classify_spec(&parse("alw_[0,10](y1 > 0 and y2 > 0)").unwrap());
        let m = load_model("synthetic", &ModelParams::new()).unwrap();
        let r = falsify_mab_conj(m.as_ref(), &spec, Strategy::Ucb1 { c: 1.0 }, &cfg(0, 0)).unwrap();
        assert_eq!(r.outcome, Outcome::BudgetExhausted);
        assert_eq!(r.simulations, 0);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn wrong_shape_rejected() {
        let spec = classify_spec(&parse("alw_[0,10](y1 > 0 or y2 > 0)").unwrap());
        let m = load_model("synthetic", &ModelParams::new()).unwrap();
        let err = falsify_mab_conj(m.as_ref(), &spec, Strategy::Ucb1 { c: 1.0 }, &cfg(10, 0));
        assert!(matches!(err, Err(FalsifyError::WrongShape { .. })));
    }

    #[test]
    fn unknown_channel_rejected() {
        let phi = parse("alw_[0,30](torque < 3)").unwrap();
        let err = falsify_hc(&CarModel::default(), &phi, &cfg(10, 0));
        assert!(matches!(err, Err(FalsifyError::UnknownChannel(c)) if c == "torque"));
    }

    #[test]
    fn reproducible_trace() {
        let phi = parse("alw_[0,30](gear == 4 -> speed > 43)").unwrap();
        let m: Arc<dyn SystemModel> = Arc::new(CarModel::default());
        for algo in [Algorithm::Hc, Algorithm::MabUcb, Algorithm::MabEgreedy] {
            let a = falsify(m.clone(), &phi, algo, &cfg(120, 9)).unwrap();
            let b = falsify(m.clone(), &phi, algo, &cfg(120, 9)).unwrap();
            assert_eq!(a.trace, b.trace);
            assert_eq!(a.best_point, b.best_point);
            assert!(a.simulations <= 120);
        }
    }

    #[test]
    fn hand_built_disjunctive_trace() {
        // phi1 = (x < 0.5) is false exactly on [10, 12]; phi2 = (z > 0) has
        // margin -1 there and +5 elsewhere.
        let x: Vec<f64> = (0..=20)
            .map(|j| if (10..=12).contains(&j) { 1.0 } else { 0.0 })
            .collect();
        let z: Vec<f64> = (0..=20)
            .map(|j| if (10..=12).contains(&j) { -1.0 } else { 5.0 })
            .collect();
        let y = Signal::from_columns(vec!["x".into(), "z".into()], 1.0, vec![x, z]).unwrap();
        let phi = parse("alw_[0,20](x < 0.5 or z > 0)").unwrap();
        let (i, p1, p2) = classify_spec(&phi).parts.unwrap();
        let e = disjunctive_objective(&phi, &i, [&p1, &p2], 1, &y).unwrap();
        assert_eq!(e.objective, Robustness::new(-1.0));
        assert!(e.full.is_negative());
    }

    #[test]
    fn empty_restriction_falls_back_without_spurious_witness() {
        // y1 > 0 never fails, so arm 0 always sees an empty time set.
        let phi = parse("alw_[0,10](y2 > 0 or y1 > 0)").unwrap();
        let spec = classify_spec(&phi);
        let params: ModelParams = [("r".to_string(), 0.5)].into_iter().collect();
        let m = load_model("synthetic", &params).unwrap();
        for seed in 0..5 {
            let r = falsify_mab_disj(m.as_ref(), &spec, Strategy::Ucb1 { c: 1.0 }, &cfg(90, seed))
                .unwrap();
            assert_eq!(r.outcome, Outcome::BudgetExhausted);
            assert_eq!(r.simulations, 90);
            assert!(r.robustness.value() > 0.0);
        }
    }

    #[test]
    fn json_output_embeds_witness_csv() {
        let params: ModelParams = [("r".to_string(), 3.0)].into_iter().collect();
        let m = load_model("synthetic", &params).unwrap();
        let r = falsify_hc(
            m.as_ref(),
            &parse("alw_[0,10](y2 > 0)").unwrap(),
            &cfg(5, 0),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["outcome"], "falsified");
        assert!(v["witness"].as_str().unwrap().starts_with("time,u1,u2\n"));
        assert_eq!(v["trace"][0]["k"], 1);
    }
}
