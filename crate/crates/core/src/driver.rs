//! The anytime loop: repeated sampling passes under a deadline, with
//! convergence detection, restarts on memory pressure and trace recording.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::cnf::Cnf;
use crate::count::Count;
use crate::pccdd::{BoundMode, NodeId, PccddError};
use crate::sampler::{Sampler, SamplerConfig, SamplerError};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub timeout: Duration,
    pub seed: u64,
    pub sampler: SamplerConfig,
    /// Calls between trace rows; 0 records only the final row.
    pub trace_interval: u64,
    /// Confidence parameter of the Markov lower bound.
    pub delta: Count,
    /// Stop after this many calls even if time remains.
    pub max_calls: Option<u64>,
}

impl RunConfig {
    pub fn new(sampler: SamplerConfig) -> Self {
        RunConfig {
            timeout: Duration::from_secs(60),
            seed: 0,
            sampler,
            trace_interval: 1,
            delta: Count::ratio(1, 5),
            max_calls: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub elapsed_s: f64,
    pub n_calls: u64,
    pub estimate: Count,
    pub lower: Count,
    pub upper: Count,
    pub converged: bool,
}

/// Calls made on one store between restarts and the estimate it ended with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub calls: u64,
    pub estimate: Count,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub estimate: Count,
    pub converged: bool,
    pub n_calls: u64,
    pub n_restarts: u64,
    pub ledger: Vec<Segment>,
    /// Holds with probability at least `1 - delta`; exact when converged.
    pub lower_bound: Count,
    /// Best deterministic bounds seen over the run.
    pub lower: Count,
    pub upper: Count,
    pub elapsed: Duration,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("estimate evaluation failed: {0}")]
    Evaluation(#[from] PccddError),
}

/// `delta * estimate`: a lower bound on the true count with probability at
/// least `1 - delta` when `estimate` is unbiased and nonnegative.
pub fn markov_lower_bound(estimate: &Count, delta: &Count) -> Count {
    estimate * delta
}

/// Call-weighted average of the segment estimates.
pub fn ledger_average(ledger: &[Segment]) -> Count {
    let calls: u64 = ledger.iter().map(|s| s.calls).sum();
    if calls == 0 {
        return Count::zero();
    }
    let total: Count = ledger
        .iter()
        .map(|s| &s.estimate * &Count::from_u64(s.calls))
        .sum();
    total / Count::from_u64(calls)
}

pub fn partial_kc(cnf: &Cnf, cfg: &RunConfig) -> Result<RunResult, DriverError> {
    let sampler = Sampler::new(cnf.num_vars(), cfg.sampler.clone(), cfg.seed);
    partial_kc_with(sampler, cnf, cfg)
}

/// Runs the loop on a prepared sampler (hooks, forced samples).
pub fn partial_kc_with(mut sampler: Sampler, cnf: &Cnf, cfg: &RunConfig) -> Result<RunResult, DriverError> {
    let start = Instant::now();
    let cnf = Arc::new(cnf.clone());
    let top = Count::pow2(u64::from(cnf.num_vars()));
    let mut run = Progress {
        ledger: Vec::new(),
        seg_calls: 0,
        n_calls: 0,
        n_restarts: 0,
        lower: Count::zero(),
        upper: top,
        trace: Vec::new(),
    };
    loop {
        run.n_calls += 1;
        run.seg_calls += 1;
        let root = sampler.micro_kc(&cnf)?;
        if !sampler.store().has_unknown(root) {
            let exact = sampler.store().count_full(root)?;
            run.ledger.push(Segment { calls: run.seg_calls, estimate: exact.clone() });
            run.lower = exact.clone();
            run.upper = exact.clone();
            run.trace.push(TracePoint {
                elapsed_s: start.elapsed().as_secs_f64(),
                n_calls: run.n_calls,
                estimate: exact.clone(),
                lower: exact.clone(),
                upper: exact.clone(),
                converged: true,
            });
            return Ok(RunResult {
                estimate: exact.clone(),
                converged: true,
                n_calls: run.n_calls,
                n_restarts: run.n_restarts,
                ledger: run.ledger,
                lower_bound: exact.clone(),
                lower: exact.clone(),
                upper: exact,
                elapsed: start.elapsed(),
                trace: run.trace,
            });
        }
        let out_of_time = start.elapsed() >= cfg.timeout || cfg.max_calls.is_some_and(|m| run.n_calls >= m);
        if cfg.trace_interval > 0 && run.n_calls % cfg.trace_interval == 0 && !out_of_time {
            let current = sampler.store().estimate(root)?;
            run.observe_bounds(&sampler, root);
            let point = run.point(&start, &current);
            run.trace.push(point);
        }
        if sampler.over_budget() || out_of_time {
            let current = sampler.store().estimate(root)?;
            run.observe_bounds(&sampler, root);
            run.ledger.push(Segment { calls: run.seg_calls, estimate: current.clone() });
            run.seg_calls = 0;
            if out_of_time {
                let estimate = ledger_average(&run.ledger);
                run.trace.push(TracePoint {
                    elapsed_s: start.elapsed().as_secs_f64(),
                    n_calls: run.n_calls,
                    estimate: estimate.clone(),
                    lower: run.lower.clone(),
                    upper: run.upper.clone(),
                    converged: false,
                });
                let markov = markov_lower_bound(&estimate, &cfg.delta);
                return Ok(RunResult {
                    lower_bound: markov.max(run.lower.clone()),
                    estimate,
                    converged: false,
                    n_calls: run.n_calls,
                    n_restarts: run.n_restarts,
                    ledger: run.ledger,
                    lower: run.lower,
                    upper: run.upper,
                    elapsed: start.elapsed(),
                    trace: run.trace,
                });
            }
            sampler.clear();
            run.n_restarts += 1;
        }
    }
}

struct Progress {
    ledger: Vec<Segment>,
    seg_calls: u64,
    n_calls: u64,
    n_restarts: u64,
    lower: Count,
    upper: Count,
    trace: Vec<TracePoint>,
}

impl Progress {
    fn observe_bounds(&mut self, sampler: &Sampler, root: NodeId) {
        let store = sampler.store();
        let lo = store.bound(root, BoundMode::Lower, None);
        let hi = store.bound(root, BoundMode::Upper, None);
        if lo > self.lower {
            self.lower = lo;
        }
        if hi < self.upper {
            self.upper = hi;
        }
    }

    fn point(&self, start: &Instant, current: &Count) -> TracePoint {
        let mut ledger = self.ledger.clone();
        ledger.push(Segment { calls: self.seg_calls, estimate: current.clone() });
        TracePoint {
            elapsed_s: start.elapsed().as_secs_f64(),
            n_calls: self.n_calls,
            estimate: ledger_average(&ledger),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            converged: false,
        }
    }
}
