//! `anycount`: anytime approximate model counting of DIMACS CNF formulas.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anycount::cnf::{parse_dimacs, Cnf};
use anycount::count::Count;
use anycount::driver::{partial_kc, RunConfig, RunResult, TracePoint};
use anycount::exact::exact_count;
use anycount::sampler::{Projection, SamplerConfig};
use anycount::structure::VarHeuristic;
use clap::{Parser, ValueEnum};
use serde::Serialize;

const EXIT_UNSAT: u8 = 10;
const EXIT_USAGE: u8 = 2;
const STACK_BYTES: usize = 512 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Sample until convergence or timeout.
    Anytime,
    /// Like `anytime`, also reporting deterministic lower and upper bounds.
    Bounds,
    /// Count exactly without sampling.
    ExactEasy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Heuristic {
    Score,
    MinIndex,
}

#[derive(Debug, Parser)]
#[command(name = "anycount", version, about = "Anytime approximate model counter for CNF formulas")]
struct Args {
    /// DIMACS CNF file, or `-` for standard input.
    input: PathBuf,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 60.0, value_parser = positive_f64)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Confidence parameter of the probabilistic lower bound, in (0, 1).
    #[arg(long, default_value = "0.2", value_parser = unit_interval)]
    delta: Count,
    /// Node and cache entry limit before the diagram is discarded.
    #[arg(long)]
    node_budget: Option<usize>,
    /// Write the anytime trace as CSV to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Sampling calls between trace rows; 0 keeps only the final row.
    #[arg(long, default_value_t = 1)]
    trace_interval: u64,
    #[arg(long, value_enum, default_value_t = Mode::Anytime)]
    mode: Mode,
    /// Print the result as a JSON object.
    #[arg(long)]
    json: bool,
    /// Variables kept when estimating a marginal; 0 keeps all of them.
    #[arg(long)]
    proj_size: Option<usize>,
    /// Minimum binary clause fraction for equivalence reasoning.
    #[arg(long, value_parser = unit_interval_f64)]
    kernel_ratio: Option<f64>,
    #[arg(long, value_enum, default_value_t = Heuristic::Score)]
    var_heuristic: Heuristic,
    /// Stop after this many sampling calls.
    #[arg(long)]
    max_calls: Option<u64>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn unit_interval_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("`{s}` is not in [0, 1]")),
    }
}

fn unit_interval(s: &str) -> Result<Count, String> {
    let c = Count::parse(s).map_err(|e| e.to_string())?;
    if c.is_zero() || c >= Count::one() {
        return Err(format!("`{s}` is not in (0, 1)"));
    }
    Ok(c)
}

#[derive(Debug, Serialize)]
struct Report {
    estimate: String,
    estimate_log2: f64,
    converged: bool,
    n_calls: u64,
    n_restarts: u64,
    lower_bound: String,
    elapsed_s: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<String>,
}

#[derive(Debug, Serialize)]
struct TraceRow {
    elapsed_s: f64,
    n_calls: u64,
    estimate: String,
    lower: String,
    upper: String,
    converged: bool,
}

impl From<&TracePoint> for TraceRow {
    fn from(p: &TracePoint) -> Self {
        TraceRow {
            elapsed_s: p.elapsed_s,
            n_calls: p.n_calls,
            estimate: p.estimate.to_string(),
            lower: p.lower.to_string(),
            upper: p.upper.to_string(),
            converged: p.converged,
        }
    }
}

fn read_input(path: &PathBuf) -> Result<Cnf, String> {
    let parsed = if path.as_os_str() == "-" {
        parse_dimacs(io::stdin().lock())
    } else {
        let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        parse_dimacs(BufReader::new(file))
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}

fn sampler_config(args: &Args, cnf: &Cnf) -> SamplerConfig {
    let mut cfg = SamplerConfig::for_formula(cnf);
    if let Some(b) = args.node_budget {
        cfg.node_budget = b;
    }
    match args.proj_size {
        Some(0) => cfg.projection = Projection::All,
        Some(k) => cfg.projection = Projection::Neighbors(k),
        None => {}
    }
    if let Some(r) = args.kernel_ratio {
        cfg.kernel.ratio = r;
    }
    cfg.heuristic = match args.var_heuristic {
        Heuristic::Score => VarHeuristic::Score,
        Heuristic::MinIndex => VarHeuristic::MinIndex,
    };
    cfg
}

fn exact_result(cnf: &Cnf) -> RunResult {
    let start = Instant::now();
    let count = exact_count(cnf);
    let elapsed = start.elapsed();
    RunResult {
        estimate: count.clone(),
        converged: true,
        n_calls: 0,
        n_restarts: 0,
        ledger: Vec::new(),
        lower_bound: count.clone(),
        lower: count.clone(),
        upper: count.clone(),
        elapsed,
        trace: vec![TracePoint {
            elapsed_s: elapsed.as_secs_f64(),
            n_calls: 0,
            estimate: count.clone(),
            lower: count.clone(),
            upper: count,
            converged: true,
        }],
    }
}

fn write_trace(path: &PathBuf, trace: &[TracePoint]) -> Result<(), String> {
    let err = |e: csv::Error| format!("{}: {e}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for p in trace {
        w.serialize(TraceRow::from(p)).map_err(err)?;
    }
    w.flush().map_err(|e| format!("{}: {e}", path.display()))
}

fn run(args: Args) -> Result<u8, String> {
    let cnf = read_input(&args.input)?;
    let result = match args.mode {
        Mode::ExactEasy => exact_result(&cnf),
        Mode::Anytime | Mode::Bounds => {
            let cfg = RunConfig {
                timeout: Duration::from_secs_f64(args.timeout),
                seed: args.seed,
                sampler: sampler_config(&args, &cnf),
                trace_interval: args.trace_interval,
                delta: args.delta.clone(),
                max_calls: args.max_calls,
            };
            partial_kc(&cnf, &cfg).map_err(|e| e.to_string())?
        }
    };
    if let Some(path) = &args.trace {
        write_trace(path, &result.trace)?;
    }
    let with_bounds = args.mode == Mode::Bounds;
    let report = Report {
        estimate: result.estimate.to_string(),
        estimate_log2: result.estimate.log2(),
        converged: result.converged,
        n_calls: result.n_calls,
        n_restarts: result.n_restarts,
        lower_bound: result.lower_bound.to_string(),
        elapsed_s: result.elapsed.as_secs_f64(),
        seed: args.seed,
        lower: with_bounds.then(|| result.lower.to_string()),
        upper: with_bounds.then(|| result.upper.to_string()),
    };
    let mut out = io::stdout().lock();
    if args.json {
        // log2 of 0 is not representable in JSON
        let mut value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
        if result.estimate.is_zero() {
            value["estimate_log2"] = serde_json::Value::Null;
        }
        writeln!(out, "{value}").map_err(|e| e.to_string())?;
    } else {
        writeln!(out, "s {}", if result.estimate.is_zero() { "UNSATISFIABLE" } else { "SATISFIABLE" })
            .map_err(|e| e.to_string())?;
        writeln!(out, "c estimate {}", report.estimate).map_err(|e| e.to_string())?;
        writeln!(out, "c log2 {:.6}", report.estimate_log2).map_err(|e| e.to_string())?;
        writeln!(out, "c converged {}", report.converged).map_err(|e| e.to_string())?;
        writeln!(out, "c lower_bound {}", report.lower_bound).map_err(|e| e.to_string())?;
        if let (Some(lo), Some(hi)) = (&report.lower, &report.upper) {
            writeln!(out, "c bounds {lo} {hi}").map_err(|e| e.to_string())?;
        }
        writeln!(out, "c calls {} restarts {} elapsed {:.3}s", report.n_calls, report.n_restarts, report.elapsed_s)
            .map_err(|e| e.to_string())?;
    }
    Ok(if result.converged && result.estimate.is_zero() { EXIT_UNSAT } else { 0 })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let worker = std::thread::Builder::new()
        .stack_size(STACK_BYTES)
        .spawn(move || run(args))
        .expect("spawn worker thread");
    match worker.join() {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(msg)) => {
            eprintln!("anycount: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(_) => ExitCode::FAILURE,
    }
}
