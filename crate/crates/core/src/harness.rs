//! Multi-trial experiments: configuration, parallel execution, aggregation
//! and CSV output.
//!
//! A campaign runs every spec instance (after parameter substitution), under
//! every scaling factor, with every algorithm, for `trials` seeds
//! `base_seed + trial`. Results come back in that nesting order no matter
//! which worker finished first.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::falsify::{falsify, Algorithm, FalsifyError, SearchConfig};
use crate::hillclimb::{OptimizerKind, DEFAULT_CONTROL_POINTS};
use crate::stl::{parse, ParseError, Robustness};
use crate::systems::{
    load_model, scale_formula, scale_output, ModelError, ModelParams, SystemModel,
};

/// JSON schema of [`ExperimentConfig`].
pub const CONFIG_SCHEMA: &str = include_str!("../schema/experiment.schema.json");

pub const RAW_HEADER: [&str; 9] = [
    "spec_id",
    "scale_k",
    "algo",
    "trial",
    "seed",
    "success",
    "robustness",
    "simulations",
    "seconds",
];

pub const SUMMARY_HEADER: [&str; 9] = [
    "spec_id",
    "scale_k",
    "algo",
    "SR",
    "min_time",
    "max_time",
    "avg_time",
    "delta_SR",
    "delta_time",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot parse config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("spec `{id}`: {source}")]
    Spec { id: String, source: ParseError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{id} / {algo} / trial {trial}: {source}")]
    Trial {
        id: String,
        algo: Algorithm,
        trial: usize,
        source: FalsifyError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// A formula template. `{name}` placeholders are filled from `params`, whose
/// lists must all have the same length; instance `i` uses the `i`-th value
/// of every list and is named `<id>_<i+1>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecTemplate {
    pub id: String,
    pub formula: String,
    #[serde(default)]
    pub params: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    pub channel: String,
    pub k: Vec<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub raw: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    #[serde(default)]
    pub model_params: ModelParams,
    pub specs: Vec<SpecTemplate>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Per-trial wall-clock limit in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub scaling: Option<Scaling>,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_control_points")]
    pub control_points: usize,
    #[serde(default = "default_eps")]
    pub mab_eps: f64,
    #[serde(default = "default_c")]
    pub mab_c: f64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Hc, Algorithm::MabUcb, Algorithm::MabEgreedy]
}
fn default_trials() -> usize {
    30
}
fn default_budget() -> usize {
    SearchConfig::default().budget
}
fn default_timeout() -> f64 {
    600.0
}
fn default_optimizer() -> OptimizerKind {
    OptimizerKind::CmaesLite
}
fn default_control_points() -> usize {
    DEFAULT_CONTROL_POINTS
}
fn default_eps() -> f64 {
    SearchConfig::default().mab_eps
}
fn default_c() -> f64 {
    SearchConfig::default().mab_c
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.specs.is_empty() {
            return bad("no specs given");
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms given");
        }
        if self.timeout.is_nan() || self.timeout <= 0.0 {
            return bad("timeout must be positive");
        }
        if self.control_points == 0 {
            return bad("control_points must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.mab_eps) {
            return bad("mab_eps must lie in [0, 1]");
        }
        if self.mab_c.is_nan() || self.mab_c < 0.0 {
            return bad("mab_c must be non-negative");
        }
        if let Some(s) = &self.scaling {
            if s.k.is_empty() {
                return bad("scaling.k is empty");
            }
        }
        Ok(())
    }

    /// Search settings for one trial.
    pub fn search_config(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            budget: self.budget,
            optimizer: self.optimizer,
            control_points: self.control_points,
            seed,
            timeout: Some(Duration::from_secs_f64(self.timeout)),
            mab_eps: self.mab_eps,
            mab_c: self.mab_c,
        }
    }

    fn scale_factors(&self) -> Vec<i32> {
        self.scaling.as_ref().map_or(vec![0], |s| s.k.clone())
    }
}

/// A ground spec instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecInstance {
    pub id: String,
    pub formula: String,
}

/// Replaces `{name}` placeholders; fails if any remain.
pub fn expand_specs(templates: &[SpecTemplate]) -> Result<Vec<SpecInstance>, HarnessError> {
    let mut out = Vec::new();
    for t in templates {
        let lens: Vec<usize> = t.params.values().map(Vec::len).collect();
        let n = lens.first().copied().unwrap_or(0);
        if lens.iter().any(|&l| l != n) {
            return Err(HarnessError::Config(format!(
                "spec `{}`: parameter lists differ in length",
                t.id
            )));
        }
        if t.params.is_empty() {
            out.push(ground(&t.id, &t.formula)?);
            continue;
        }
        for i in 0..n {
            let mut text = t.formula.clone();
            for (name, values) in &t.params {
                text = text.replace(&format!("{{{name}}}"), &values[i].to_string());
            }
            out.push(ground(&format!("{}_{}", t.id, i + 1), &text)?);
        }
    }
    Ok(out)
}

fn ground(id: &str, text: &str) -> Result<SpecInstance, HarnessError> {
    if text.contains('{') || text.contains('}') {
        return Err(HarnessError::Config(format!(
            "spec `{id}` has an unbound parameter: {text}"
        )));
    }
    Ok(SpecInstance {
        id: id.to_string(),
        formula: text.to_string(),
    })
}

/// One row of the raw results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub spec_id: String,
    pub scale_k: i32,
    pub algo: Algorithm,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub robustness: Robustness,
    pub simulations: usize,
    pub seconds: f64,
}

struct Job {
    spec: usize,
    k: i32,
    algo: Algorithm,
    trial: usize,
}

/// Runs the whole campaign.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, HarnessError> {
    cfg.validate()?;
    let base = load_model(&cfg.model, &cfg.model_params)?;
    let specs = expand_specs(&cfg.specs)?;

    // Every (spec, scale) pair gets its model and formula up front, so a bad
    // spec fails before any trial runs.
    let mut variants: Vec<Vec<(Arc<dyn SystemModel>, crate::stl::Formula)>> = Vec::new();
    for s in &specs {
        let phi = parse(&s.formula).map_err(|source| HarnessError::Spec {
            id: s.id.clone(),
            source,
        })?;
        let mut per_k = Vec::new();
        for k in cfg.scale_factors() {
            per_k.push(match &cfg.scaling {
                Some(sc) => (
                    scale_output(base.clone(), &sc.channel, k)?,
                    scale_formula(&phi, &sc.channel, k)?,
                ),
                None => (base.clone(), phi.clone()),
            });
        }
        variants.push(per_k);
    }

    let mut jobs = Vec::new();
    for spec in 0..specs.len() {
        for k in cfg.scale_factors() {
            for &algo in &cfg.algorithms {
                for trial in 0..cfg.trials {
                    jobs.push(Job {
                        spec,
                        k,
                        algo,
                        trial,
                    });
                }
            }
        }
    }

    let ks = cfg.scale_factors();
    let run = |job: &Job| -> Result<TrialRecord, HarnessError> {
        let ki = ks
            .iter()
            .position(|&k| k == job.k)
            .expect("k from the sweep");
        let (model, phi) = &variants[job.spec][ki];
        let seed = cfg.base_seed.wrapping_add(job.trial as u64);
        let id = &specs[job.spec].id;
        let res =
            falsify(model.clone(), phi, job.algo, &cfg.search_config(seed)).map_err(|source| {
                HarnessError::Trial {
                    id: id.clone(),
                    algo: job.algo,
                    trial: job.trial,
                    source,
                }
            })?;
        let success = res.falsified();
        let seconds = if res.timed_out && !success {
            cfg.timeout
        } else {
            res.seconds
        };
        Ok(TrialRecord {
            spec_id: id.clone(),
            scale_k: job.k,
            algo: job.algo,
            trial: job.trial,
            seed,
            success,
            robustness: res.robustness,
            simulations: res.simulations,
            seconds,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()?;
    pool.install(|| jobs.par_iter().map(run).collect())
}

/// Symmetric percentage difference of `m` against the baseline `b`;
/// `None` when `m + b == 0`.
pub fn delta_pct(m: f64, b: f64) -> Option<f64> {
    let s = m + b;
    (s != 0.0).then(|| (m - b) * 100.0 / (0.5 * s))
}

/// Aggregates of one (spec, scale, algorithm) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub spec_id: String,
    pub scale_k: i32,
    pub algo: Algorithm,
    pub trials: usize,
    pub sr: usize,
    pub min_time: f64,
    pub max_time: f64,
    pub avg_time: f64,
    pub avg_simulations: f64,
    /// Against `hc` on the same spec and scale; `None` for `hc` itself, when
    /// no baseline ran, or when the sum of the compared values is 0.
    pub delta_sr: Option<f64>,
    pub delta_time: Option<f64>,
}

/// Groups raw records in order of first appearance.
pub fn aggregate(raw: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut groups: Vec<Vec<&TrialRecord>> = Vec::new();
    for r in raw {
        let pos = rows
            .iter()
            .position(|s| s.spec_id == r.spec_id && s.scale_k == r.scale_k && s.algo == r.algo);
        let i = pos.unwrap_or_else(|| {
            rows.push(SummaryRow {
                spec_id: r.spec_id.clone(),
                scale_k: r.scale_k,
                algo: r.algo,
                trials: 0,
                sr: 0,
                min_time: f64::INFINITY,
                max_time: f64::NEG_INFINITY,
                avg_time: 0.0,
                avg_simulations: 0.0,
                delta_sr: None,
                delta_time: None,
            });
            groups.push(Vec::new());
            rows.len() - 1
        });
        groups[i].push(r);
    }
    for (row, g) in rows.iter_mut().zip(&groups) {
        let n = g.len() as f64;
        row.trials = g.len();
        row.sr = g.iter().filter(|r| r.success).count();
        for r in g {
            row.min_time = row.min_time.min(r.seconds);
            row.max_time = row.max_time.max(r.seconds);
        }
        row.avg_time = g.iter().map(|r| r.seconds).sum::<f64>() / n;
        row.avg_simulations = g.iter().map(|r| r.simulations as f64).sum::<f64>() / n;
    }
    let snapshot = rows.clone();
    for row in rows.iter_mut().filter(|r| r.algo != Algorithm::Hc) {
        let baseline = snapshot.iter().find(|b| {
            b.algo == Algorithm::Hc && b.spec_id == row.spec_id && b.scale_k == row.scale_k
        });
        if let Some(b) = baseline {
            row.delta_sr = delta_pct(row.sr as f64, b.sr as f64);
            row.delta_time = delta_pct(row.avg_time, b.avg_time);
        }
    }
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}

pub fn raw_csv(raw: &[TrialRecord]) -> String {
    csv_text(
        &RAW_HEADER,
        raw.iter().map(|r| {
            vec![
                r.spec_id.clone(),
                r.scale_k.to_string(),
                r.algo.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                u8::from(r.success).to_string(),
                r.robustness.to_string(),
                r.simulations.to_string(),
                format!("{:.6}", r.seconds),
            ]
        }),
    )
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    csv_text(
        &SUMMARY_HEADER,
        summary.iter().map(|s| {
            vec![
                s.spec_id.clone(),
                s.scale_k.to_string(),
                s.algo.to_string(),
                s.sr.to_string(),
                format!("{:.6}", s.min_time),
                format!("{:.6}", s.max_time),
                format!("{:.6}", s.avg_time),
                opt(s.delta_sr),
                opt(s.delta_time),
            ]
        }),
    )
}

/// Drops the `seconds` column, the only machine-dependent one.
pub fn without_seconds(raw_csv: &str) -> String {
    let mut out = String::new();
    for line in raw_csv.lines() {
        let cut = line.rfind(',').unwrap_or(line.len());
        let _ = writeln!(out, "{}", &line[..cut]);
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(algo: Algorithm, trial: usize, success: bool, seconds: f64) -> TrialRecord {
        TrialRecord {
            spec_id: "S".into(),
            scale_k: 0,
            algo,
            trial,
            seed: trial as u64,
            success,
            robustness: Robustness::new(if success { -1.0 } else { 1.0 }),
            simulations: 10,
            seconds,
        }
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_pct(30.0, 20.0), Some(40.0));
        assert_eq!(delta_pct(7.0, 7.0), Some(0.0));
        let d = delta_pct(28.6, 20.2).unwrap();
        assert!((d - 34.426).abs() < 1e-3, "{d}");
        assert_eq!(delta_pct(0.0, 0.0), None);
    }

    #[test]
    fn aggregate_times_and_deltas() {
        let raw = vec![
            record(Algorithm::Hc, 0, true, 10.0),
            record(Algorithm::Hc, 1, false, 20.0),
            record(Algorithm::MabUcb, 0, true, 5.0),
            record(Algorithm::MabUcb, 1, true, 5.0),
        ];
        let s = aggregate(&raw);
        assert_eq!(s.len(), 2);
        assert_eq!(
            (s[0].min_time, s[0].max_time, s[0].avg_time),
            (10.0, 20.0, 15.0)
        );
        assert_eq!(s[0].sr, 1);
        assert_eq!(s[0].delta_sr, None);
        // (2 - 1) * 100 / 1.5 and (5 - 15) * 100 / 10.
        assert!((s[1].delta_sr.unwrap() - 66.666_666).abs() < 1e-4);
        assert_eq!(s[1].delta_time, Some(-100.0));
    }

    #[test]
    fn blank_delta_when_both_zero() {
        let raw = vec![
            record(Algorithm::Hc, 0, false, 1.0),
            record(Algorithm::MabEgreedy, 0, false, 1.0),
        ];
        let text = summary_csv(&aggregate(&raw));
        let last = text.lines().last().unwrap();
        assert!(
            last.ends_with(",0,1.000000,1.000000,1.000000,,0.000"),
            "{last}"
        );
    }

    #[test]
    fn raw_csv_layout() {
        let text = raw_csv(&[record(Algorithm::MabUcb, 3, true, 0.5)]);
        assert_eq!(
            text,
            "spec_id,scale_k,algo,trial,seed,success,robustness,simulations,seconds\n\
             S,0,mab-ucb,3,3,1,-1,10,0.500000\n"
        );
        assert_eq!(
            without_seconds(&text).lines().nth(1),
            Some("S,0,mab-ucb,3,3,1,-1,10")
        );
    }

    #[test]
    fn spec_expansion() {
        let t = SpecTemplate {
            id: "AT1".into(),
            formula: "alw_[0,30](gear == 3 -> speed > {rho})".into(),
            params: [("rho".to_string(), vec![20.6, 20.0])]
                .into_iter()
                .collect(),
        };
        let s = expand_specs(&[t]).unwrap();
        assert_eq!(s[0].id, "AT1_1");
        assert_eq!(s[1].formula, "alw_[0,30](gear == 3 -> speed > 20)");
        let unbound = SpecTemplate {
            id: "X".into(),
            formula: "alw_[0,{tau}](x > 0)".into(),
            params: BTreeMap::new(),
        };
        assert!(matches!(
            expand_specs(&[unbound]),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": "car", "specs": [{"id": "A", "formula": "alw_[0,30](speed < 120)"}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 30);
        assert_eq!(cfg.timeout, 600.0);
        assert_eq!(cfg.algorithms.len(), 3);
        cfg.validate().unwrap();
        let bad = ExperimentConfig {
            trials: 0,
            ..cfg.clone()
        };
        assert!(bad.validate().is_err());
        assert!(
            ExperimentConfig::from_json(r#"{"model": "car", "specs": [], "bogus": 1}"#).is_err()
        );
    }

    #[test]
    fn schema_is_json() {
        let v: serde_json::Value = serde_json::from_str(CONFIG_SCHEMA).unwrap();
        assert_eq!(v["type"], "object");
    }

    #[test]
    fn scaling_sweep_emits_instances() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": "car", "trials": 1, "budget": 2, "algorithms": ["hc"],
                "specs": [{"id": "A", "formula": "alw_[0,30](speed < 120)"}],
                "scaling": {"channel": "speed", "k": [-2, 0, 1, 3]}}"#,
        )
        .unwrap();
        let raw = run_experiment(&cfg).unwrap();
        let ks: Vec<i32> = raw.iter().map(|r| r.scale_k).collect();
        assert_eq!(ks, vec![-2, 0, 1, 3]);
    }
}
