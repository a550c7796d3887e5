//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line with its
//! runtime; the test fails if any criterion does.
//!
//! Lines go straight to stderr so they show up without `--nocapture`.

mod common;

use std::convert::Infallible;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use falsar::bandit::{select_epsilon_greedy, select_ucb1, BanditHistory, Strategy};
use falsar::falsify::{falsify, search_bandit, Algorithm, Evaluation, SearchConfig, SearchRun};
use falsar::harness::without_seconds;
use falsar::stl::{
    eval_boolean, eval_robust, eval_robust_restricted, falsified_time_set, parse, Formula,
    Robustness,
};
use falsar::systems::{load_model, parse_param, scale_formula, scale_output, ModelParams};
use falsar::Signal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Outcome of one criterion: `Err` carries the reason it failed.
type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit_secs: u64, started: Instant, v: Verdict) -> Verdict {
    let took = started.elapsed();
    let detail = |d: String| format!("{d}; {:.1} s of {limit_secs} s", took.as_secs_f64());
    match v {
        Ok(d) if took <= Duration::from_secs(limit_secs) => Ok(detail(d)),
        Ok(d) | Err(d) => Err(detail(d)),
    }
}

// 1 and 2 share a corpus.
const CORPUS: u64 = 10_000;

fn corpus_instance(seed: u64) -> (Formula, Signal) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = common::random_formula(&mut rng, 4);
    let w = common::random_signal(&mut rng, 50);
    (phi, w)
}

fn c1_oracle_equivalence() -> Verdict {
    let t = Instant::now();
    let mismatches: Vec<u64> = (0..CORPUS)
        .filter(|&s| {
            let (phi, w) = corpus_instance(s);
            // Numeric equality: the two evaluators may disagree on the sign of a zero.
            eval_robust(&phi, &w).unwrap().value() != common::robust(&phi, &w)
        })
        .collect();
    let v = check(
        mismatches.is_empty(),
        format!(
            "{CORPUS} instances, mismatching seeds {:?}",
            &mismatches[..mismatches.len().min(5)]
        ),
    );
    within(30, t, v)
}

fn c2_sign_soundness() -> Verdict {
    let mut violations = 0;
    for s in 0..CORPUS {
        let (phi, w) = corpus_instance(s);
        let r = eval_robust(&phi, &w).unwrap().value();
        let b = eval_boolean(&phi, &w).unwrap();
        violations += usize::from((r > 0.0 && !b) || (r < 0.0 && b));
    }
    check(
        violations == 0,
        format!("{violations} violations in {CORPUS} instances"),
    )
}

fn c3_lemma_1() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut cases, mut negative, mut violations) = (0, 0, 0);
    while cases < 1000 {
        let p1 = common::random_formula(&mut rng, 3);
        let p2 = common::random_formula(&mut rng, 3);
        let i = common::random_interval(&mut rng);
        let w = common::random_signal(&mut rng, 50);
        let set = falsified_time_set(&p2, &w, &i).unwrap();
        if set.is_empty() {
            continue;
        }
        cases += 1;
        if eval_robust_restricted(&p1, &w, &set).unwrap().is_negative() {
            negative += 1;
            let full = Formula::always(i, Formula::or(p1, p2));
            violations += usize::from(!eval_robust(&full, &w).unwrap().is_negative());
        }
    }
    let v = check(
        violations == 0,
        format!("{cases} cases, {negative} with negative restricted robustness, {violations} violations"),
    );
    within(10, t, v)
}

fn speed_trace(values: impl Fn(usize) -> f64) -> Signal {
    Signal::from_rows(
        vec!["speed".into()],
        1.0,
        (0..=30).map(|j| vec![values(j)]).collect(),
    )
    .unwrap()
}

fn c4_table_semantics() -> Verdict {
    let phi = parse("alw_[0,30](speed<120)").unwrap();
    let rb = |w: Signal| eval_robust(&phi, &w).unwrap().value();
    let constant = rb(speed_trace(|_| 90.0));
    let dip = rb(speed_trace(|j| if j == 12 { 110.0 } else { 90.0 }));
    let reach = rb(speed_trace(|j| 90.0 + 40.0 * (j.min(20) as f64) / 20.0));
    check(
        constant == 30.0 && dip == 10.0 && reach == -10.0,
        format!("constant 90 -> {constant}, peak 110 -> {dip}, peak 130 -> {reach}"),
    )
}

const SCALES: [i32; 4] = [-2, 0, 1, 3];

/// Replays per-arm robustness streams through a bandit; the `n`-th play of
/// arm `j` observes `streams[j][n] * factors[j]`.
fn replay(
    strategy: Strategy,
    streams: &[Vec<f64>; 2],
    factors: [f64; 2],
    seed: u64,
) -> BanditHistory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = BanditHistory::new(2);
    for _ in 0..streams[0].len() {
        let arm = match strategy {
            Strategy::Ucb1 { c } => select_ucb1(&h, c),
            Strategy::EpsilonGreedy { eps } => select_epsilon_greedy(&h, eps, &mut rng),
        };
        let rb = streams[arm][h.plays(arm)] * factors[arm];
        h.record(arm, Robustness::new(rb));
    }
    h
}

fn mock_arm(arm: usize, x: &[f64]) -> f64 {
    let d = |c: (f64, f64)| (x[0] - c.0).hypot(x[1] - c.1);
    match arm {
        0 => d((0.5, 0.5)) + 0.3,
        _ => d((-0.6, 0.7)) - 0.05,
    }
}

fn mock_search(strategy: Strategy, seed: u64, factors: [f64; 2]) -> SearchRun {
    let cfg = SearchConfig {
        budget: 400,
        seed,
        ..SearchConfig::default()
    };
    search_bandit(2, vec![(-1.0, 1.0); 2], strategy, &cfg, |arm, x| {
        let full = (0..2)
            .map(|j| factors[j] * mock_arm(j, x))
            .fold(f64::INFINITY, f64::min);
        Ok::<_, Infallible>(Evaluation {
            objective: Robustness::new(factors[arm] * mock_arm(arm, x)),
            full: Robustness::new(full),
        })
    })
    .unwrap()
}

fn fingerprint(h: &BanditHistory) -> (Vec<usize>, Vec<Vec<u64>>) {
    let bits = (0..h.arms())
        .map(|j| h.rewards(j).iter().map(|r| r.to_bits()).collect())
        .collect();
    (h.sequence().to_vec(), bits)
}

fn c5_scale_invariance() -> Verdict {
    let strategies = [
        Strategy::Ucb1 { c: 1.0 },
        Strategy::EpsilonGreedy { eps: 0.1 },
    ];
    let (mut runs, mut diffs) = (0, 0);
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Drifting streams with occasional sign changes.
        let streams: [Vec<f64>; 2] = std::array::from_fn(|_| {
            let mut v: f64 = rng.random_range(0.5..5.0);
            (0..300)
                .map(|_| {
                    v = v * rng.random_range(0.8..1.1) + rng.random_range(-0.05..0.05);
                    v
                })
                .collect()
        });
        for strategy in strategies {
            let base = fingerprint(&replay(strategy, &streams, [1.0, 1.0], seed));
            let search = fingerprint(
                mock_search(strategy, seed, [1.0, 1.0])
                    .bandit
                    .as_ref()
                    .unwrap(),
            );
            for k0 in SCALES {
                for k1 in SCALES {
                    let f = [10f64.powi(k0), 10f64.powi(k1)];
                    runs += 2;
                    diffs += usize::from(fingerprint(&replay(strategy, &streams, f, seed)) != base);
                    let scaled = mock_search(strategy, seed, f);
                    diffs += usize::from(fingerprint(scaled.bandit.as_ref().unwrap()) != search);
                }
            }
        }
    }
    check(
        diffs == 0,
        format!("{diffs} of {runs} scaled runs differ from the unscaled run"),
    )
}

fn success_counts(
    model: &Arc<dyn falsar::systems::SystemModel>,
    phi: &Formula,
    algo: Algorithm,
    cfg: impl Fn(u64) -> SearchConfig + Sync,
) -> (usize, f64) {
    let results: Vec<(bool, usize)> = (0..30u64)
        .into_par_iter()
        .map(|seed| {
            let r = falsify(Arc::clone(model), phi, algo, &cfg(seed)).unwrap();
            (r.falsified(), r.simulations)
        })
        .collect();
    let sr = results.iter().filter(|r| r.0).count();
    let sims = results.iter().map(|r| r.1 as f64).sum::<f64>() / 30.0;
    (sr, sims)
}

fn c6_scale_problem() -> Verdict {
    let t = Instant::now();
    let params: ModelParams = [parse_param("m2=1000").unwrap()].into_iter().collect();
    let model = load_model("synthetic", &params).unwrap();
    let phi = parse("alw_[0,10](y1 > 0 and y2 > 0)").unwrap();
    let cfg = |seed| SearchConfig {
        budget: 200,
        seed,
        control_points: 1,
        ..SearchConfig::default()
    };
    let (hc, _) = success_counts(&model, &phi, Algorithm::Hc, cfg);
    let (ucb, _) = success_counts(&model, &phi, Algorithm::MabUcb, cfg);
    let v = check(
        hc <= 10 && ucb >= 24,
        format!("hc SR {hc}/30, mab-ucb SR {ucb}/30"),
    );
    within(300, t, v)
}

fn c7_desk_scale() -> Verdict {
    let t = Instant::now();
    let car = load_model("car", &ModelParams::new()).unwrap();
    let cfg = |seed| SearchConfig {
        budget: 300,
        seed,
        ..SearchConfig::default()
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for (id, text) in [
        ("AT1", "alw_[0,30](gear == 3 -> speed > 20.6)"),
        ("AT2", "alw_[0,30](gear == 4 -> speed > 43)"),
    ] {
        let phi = parse(text).unwrap();
        for k in [0, 3] {
            let model = scale_output(Arc::clone(&car), "speed", k).unwrap();
            let psi = scale_formula(&phi, "speed", k).unwrap();
            let (hc, hc_sims) = success_counts(&model, &psi, Algorithm::Hc, cfg);
            let (ucb, ucb_sims) = success_counts(&model, &psi, Algorithm::MabUcb, cfg);
            ok &= hc >= 25 && ucb >= 25;
            if k == 3 {
                ok &= ucb_sims <= hc_sims;
            }
            detail.push(format!(
                "{id} k={k}: hc {hc}/30 ({hc_sims:.1} sims), mab-ucb {ucb}/30 ({ucb_sims:.1} sims)"
            ));
        }
    }
    within(600, t, check(ok, detail.join("; ")))
}

fn c8_ucb_regret() -> Verdict {
    let means = [0.9, 0.1];
    let fractions: Vec<f64> = (0..30u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut h = BanditHistory::new(2);
            for _ in 0..10_000 {
                let arm = select_ucb1(&h, std::f64::consts::SQRT_2);
                let reward = if rng.random_bool(means[arm]) {
                    1.0
                } else {
                    0.0
                };
                h.push(arm, Robustness::new(reward), reward);
            }
            h.plays(0) as f64 / 10_000.0
        })
        .collect();
    let worst = fractions.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        worst >= 0.9,
        format!("lowest optimal-arm fraction over 30 seeds {worst:.4}"),
    )
}

fn c9_epsilon_greedy() -> Verdict {
    let mut h = BanditHistory::new(2);
    h.push(0, Robustness::new(1.0), 0.8);
    h.push(1, Robustness::new(1.0), 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 100_000;
    let zeros = (0..n)
        .filter(|_| select_epsilon_greedy(&h, 0.1, &mut rng) == 0)
        .count();
    let f0 = zeros as f64 / n as f64;
    let f1 = 1.0 - f0;
    check(
        (f0 - 0.95).abs() <= 0.01 && (f1 - 0.05).abs() <= 0.01,
        format!("frequencies ({f0:.4}, {f1:.4})"),
    )
}

fn c10_golden() -> Verdict {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden");
    let out = tempfile::tempdir().unwrap();
    let raw = out.path().join("raw.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_falsar"))
        .arg("bench")
        .arg(format!("{dir}/bench.json"))
        .arg("--raw")
        .arg(&raw)
        .arg("--summary")
        .arg(out.path().join("summary.csv"))
        .env_remove("FALSAR_SEED")
        .status()
        .unwrap();
    if !status.success() {
        return Err(format!("bench exited with {status}"));
    }
    let got = without_seconds(&std::fs::read_to_string(raw).unwrap());
    let want = without_seconds(&std::fs::read_to_string(format!("{dir}/bench_raw.csv")).unwrap());
    check(
        got == want,
        format!(
            "{} raw rows compared with tests/golden/bench_raw.csv",
            want.lines().count() - 1
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        (
            "monitor agrees with brute-force evaluator",
            c1_oracle_equivalence,
        ),
        ("robustness sign refines Boolean truth", c2_sign_soundness),
        (
            "restricted robustness implies disjunction falsified",
            c3_lemma_1,
        ),
        (
            "alw_[0,30](speed<120) on constructed traces",
            c4_table_semantics,
        ),
        (
            "bandit decisions ignore per-arm scaling",
            c5_scale_invariance,
        ),
        ("scale problem on the synthetic model", c6_scale_problem),
        ("car surrogate AT1/AT2 competence", c7_desk_scale),
        ("UCB1 plays the better Bernoulli arm", c8_ucb_regret),
        ("epsilon-greedy draw frequencies", c9_epsilon_greedy),
        ("bench reproduces golden raw CSV", c10_golden),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        writeln!(
            err,
            "acceptance {:>2} {tag} [{secs:7.2} s] {name}: {detail}",
            i + 1
        )
        .unwrap();
        if verdict.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
