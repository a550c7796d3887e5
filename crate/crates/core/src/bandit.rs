//! Multi-armed bandit bookkeeping, arm selection, and the hill-climbing-gain
//! reward.
//!
//! Arms are indexed from 0. Every selection rule breaks ties towards the
//! lowest index so that runs replay exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stl::Robustness;

/// Gains are rounded to multiples of `1 / GAIN_STEPS`. Scaling an arm's
/// robustness values by a positive constant changes the gain ratio by at most
/// a few ulps; rounding removes that noise so the reward, and every decision
/// based on it, is bitwise unchanged.
const GAIN_STEPS: f64 = 1e9;
/// Below this magnitude the largest robustness is treated as zero.
const GAIN_GUARD: f64 = 1e-12;

/// Per-arm play counts, rewards and robustness values, plus the global play
/// sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditHistory {
    rewards: Vec<Vec<f64>>,
    /// Running reward sums, accumulated in play order.
    reward_sums: Vec<f64>,
    robustness: Vec<Vec<Robustness>>,
    sequence: Vec<usize>,
}

impl BanditHistory {
    pub fn new(arms: usize) -> Self {
        Self {
            rewards: vec![Vec::new(); arms],
            reward_sums: vec![0.0; arms],
            robustness: vec![Vec::new(); arms],
            sequence: Vec::new(),
        }
    }

    pub fn arms(&self) -> usize {
        self.rewards.len()
    }

    /// Total number of plays `k`.
    pub fn total_plays(&self) -> usize {
        self.sequence.len()
    }

    /// Visit count `N(j, k)`.
    pub fn plays(&self, arm: usize) -> usize {
        self.rewards[arm].len()
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn rewards(&self, arm: usize) -> &[f64] {
        &self.rewards[arm]
    }

    pub fn robustness(&self, arm: usize) -> &[Robustness] {
        &self.robustness[arm]
    }

    /// Records a play with an explicit reward.
    pub fn push(&mut self, arm: usize, rb: Robustness, reward: f64) {
        self.rewards[arm].push(reward);
        self.reward_sums[arm] += reward;
        self.robustness[arm].push(rb);
        self.sequence.push(arm);
    }

    /// Records a falsification attempt on `arm` whose best robustness was
    /// `rb`; the reward stored is the arm's hill-climbing gain after the play.
    pub fn record(&mut self, arm: usize, rb: Robustness) -> f64 {
        self.robustness[arm].push(rb);
        let reward = self.hill_climbing_gain(arm);
        self.rewards[arm].push(reward);
        self.reward_sums[arm] += reward;
        self.sequence.push(arm);
        reward
    }

    /// Mean reward of an arm; `None` if it was never played.
    pub fn empirical_average(&self, arm: usize) -> Option<f64> {
        let n = self.rewards[arm].len();
        (n > 0).then(|| self.reward_sums[arm] / n as f64)
    }

    /// `(max-rb - last-rb) / max-rb` over the arm's robustness values, or 0
    /// when the arm is unplayed or its largest value is (nearly) zero.
    pub fn hill_climbing_gain(&self, arm: usize) -> f64 {
        let rbs = &self.robustness[arm];
        let Some(last) = rbs.last() else {
            return 0.0;
        };
        let max = rbs.iter().fold(Robustness::NEG_INF, |m, &r| m.max(r));
        let (max, last) = (max.value(), last.value());
        if max.abs() < GAIN_GUARD {
            return 0.0;
        }
        let gain = (max - last) / max;
        if gain.is_nan() {
            0.0
        } else if gain.is_infinite() {
            gain.signum()
        } else {
            (gain * GAIN_STEPS).round() / GAIN_STEPS
        }
    }

    fn unplayed(&self) -> Option<usize> {
        (0..self.arms()).find(|&j| self.plays(j) == 0)
    }

    /// Arm with the highest empirical average; lowest index among ties.
    pub fn empirically_optimal(&self) -> usize {
        let mut best = 0;
        let mut best_avg = f64::NEG_INFINITY;
        for j in 0..self.arms() {
            let avg = self.empirical_average(j).unwrap_or(f64::NEG_INFINITY);
            if avg > best_avg {
                best = j;
                best_avg = avg;
            }
        }
        best
    }
}

/// Arm-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Ucb1 { c: f64 },
    EpsilonGreedy { eps: f64 },
}

impl Strategy {
    pub fn select(&self, h: &BanditHistory, rng: &mut impl Rng) -> usize {
        match *self {
            Strategy::Ucb1 { c } => select_ucb1(h, c),
            Strategy::EpsilonGreedy { eps } => select_epsilon_greedy(h, eps, rng),
        }
    }
}

/// UCB1: plays every arm once in index order, then maximizes
/// `R(j) + c * sqrt(2 ln k / N(j))`.
pub fn select_ucb1(h: &BanditHistory, c: f64) -> usize {
    if let Some(j) = h.unplayed() {
        return j;
    }
    let log_k = (h.total_plays() as f64).ln();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for j in 0..h.arms() {
        let avg = h.empirical_average(j).expect("every arm played");
        let score = avg + c * (2.0 * log_k / h.plays(j) as f64).sqrt();
        if score > best_score {
            best = j;
            best_score = score;
        }
    }
    best
}

/// Epsilon-greedy: unplayed arms first (lowest index), then the empirically
/// optimal arm with probability `1 - eps` and a uniformly random arm
/// otherwise, so the optimal arm is drawn with probability `1 - eps + eps/n`.
pub fn select_epsilon_greedy(h: &BanditHistory, eps: f64, rng: &mut impl Rng) -> usize {
    if let Some(j) = h.unplayed() {
        return j;
    }
    let u: f64 = rng.random();
    if u < 1.0 - eps {
        h.empirically_optimal()
    } else {
        rng.random_range(0..h.arms())
    }
}
