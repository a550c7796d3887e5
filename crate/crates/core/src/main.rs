use std::error::Error;
use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use falsar::falsify::{falsify, Algorithm, SearchConfig};
use falsar::harness::{
    aggregate, raw_csv, run_experiment, summary_csv, write_file, ExperimentConfig,
};
use falsar::hillclimb::OptimizerKind;
use falsar::stl::{eval_robust, parse};
use falsar::systems::{load_model, parse_param, scale_formula, scale_output, ModelParams};
use falsar::Signal;

#[derive(Parser)]
#[command(
    name = "falsar",
    version,
    about = "Falsify hybrid-system models against STL specs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one falsification trial.
    Falsify(FalsifyArgs),
    /// Run a multi-trial campaign from a JSON config.
    Bench(BenchArgs),
    /// Print the robustness of a formula on a CSV trace.
    Monitor(MonitorArgs),
}

#[derive(Args)]
struct FalsifyArgs {
    /// Built-in model: car, fuel or synthetic.
    #[arg(long)]
    model: String,
    /// Model parameter as key=value; repeatable.
    #[arg(long = "model-param", value_name = "KEY=VALUE")]
    model_params: Vec<String>,
    /// STL formula to falsify.
    #[arg(long)]
    spec: String,
    #[arg(long, default_value = "mab-ucb")]
    algo: String,
    #[arg(long, default_value_t = 300)]
    budget: usize,
    #[arg(long, default_value = "cmaes-lite")]
    optimizer: String,
    #[arg(long = "control-points", default_value_t = 5)]
    control_points: usize,
    #[arg(long, env = "FALSAR_SEED", default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long = "mab-eps", default_value_t = 0.1)]
    mab_eps: f64,
    #[arg(long = "mab-c", default_value_t = 1.0)]
    mab_c: f64,
    /// Scale an output channel by 10^k, as channel:k.
    #[arg(long, value_name = "CHANNEL:K")]
    scale: Option<String>,
    /// Write the falsifying input as CSV.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Print the full result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    timeout: Option<f64>,
    /// Base seed; trial i uses seed + i.
    #[arg(long, env = "FALSAR_SEED")]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long = "control-points")]
    control_points: Option<usize>,
    /// Raw per-trial CSV.
    #[arg(long)]
    raw: Option<PathBuf>,
    /// Summary CSV; printed to stdout when no path is configured.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    /// STL formula.
    #[arg(long)]
    spec: String,
    /// CSV trace with a leading time column.
    #[arg(long)]
    trace: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Falsify(a) => run_falsify(a),
        Command::Bench(a) => run_bench(a),
        Command::Monitor(a) => run_monitor(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn parse_scale(text: &str) -> Result<(String, i32), Box<dyn Error>> {
    let (ch, k) = text
        .rsplit_once(':')
        .ok_or_else(|| format!("--scale expects channel:k, got `{text}`"))?;
    Ok((
        ch.to_string(),
        k.parse().map_err(|e| format!("--scale `{text}`: {e}"))?,
    ))
}

fn run_falsify(a: FalsifyArgs) -> Result<(), Box<dyn Error>> {
    let params: ModelParams = a
        .model_params
        .iter()
        .map(|p| parse_param(p))
        .collect::<Result<_, _>>()?;
    let mut model = load_model(&a.model, &params)?;
    let mut phi = parse(&a.spec)?;
    if let Some(s) = &a.scale {
        let (ch, k) = parse_scale(s)?;
        model = scale_output(model, &ch, k)?;
        phi = scale_formula(&phi, &ch, k)?;
    }
    let algo: Algorithm = a.algo.parse()?;
    let cfg = SearchConfig {
        budget: a.budget,
        optimizer: a.optimizer.parse()?,
        control_points: a.control_points,
        seed: a.seed,
        timeout: a.timeout.map(Duration::from_secs_f64),
        mab_eps: a.mab_eps,
        mab_c: a.mab_c,
    };
    let res = falsify(model, &phi, algo, &cfg)?;
    if let (Some(path), Some(w)) = (&a.witness, &res.witness) {
        w.write_csv(File::create(path).map_err(|e| format!("{}: {e}", path.display()))?)?;
    }
    if a.json {
        println!("{}", res.to_json());
    } else {
        let verdict = if res.falsified() {
            "falsified"
        } else {
            "not falsified"
        };
        println!(
            "{verdict}: robustness {} after {} simulations ({:.3} s{})",
            res.robustness,
            res.simulations,
            res.seconds,
            if res.timed_out { ", timed out" } else { "" }
        );
    }
    Ok(())
}

fn run_bench(a: BenchArgs) -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.budget {
        cfg.budget = v;
    }
    if let Some(v) = a.timeout {
        cfg.timeout = v;
    }
    if let Some(v) = a.seed {
        cfg.base_seed = v;
    }
    if let Some(v) = a.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = a.algorithms {
        cfg.algorithms = v.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    }
    if let Some(v) = a.optimizer {
        cfg.optimizer = v.parse::<OptimizerKind>()?;
    }
    if let Some(v) = a.control_points {
        cfg.control_points = v;
    }
    if a.raw.is_some() {
        cfg.output.raw = a.raw;
    }
    if a.summary.is_some() {
        cfg.output.summary = a.summary;
    }

    let raw = run_experiment(&cfg)?;
    if let Some(p) = &cfg.output.raw {
        write_file(p, &raw_csv(&raw))?;
    }
    let summary = summary_csv(&aggregate(&raw));
    match &cfg.output.summary {
        Some(p) => write_file(p, &summary)?,
        None => print!("{summary}"),
    }
    Ok(())
}

fn run_monitor(a: MonitorArgs) -> Result<(), Box<dyn Error>> {
    let phi = parse(&a.spec)?;
    let file = File::open(&a.trace).map_err(|e| format!("{}: {e}", a.trace.display()))?;
    let w = Signal::read_csv(file)?;
    println!("{}", eval_robust(&phi, &w)?);
    Ok(())
}
