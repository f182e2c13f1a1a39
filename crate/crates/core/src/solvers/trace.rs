use std::time::Instant;

use super::{SolverConfig, SolverKind};

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalStatus {
    TargetReached,
    IterBudget,
    TimeBudget,
    /// Newton-CG gradient test satisfied without a target.
    Converged,
}

impl TerminalStatus {
    pub fn name(self) -> &'static str {
        match self {
            TerminalStatus::TargetReached => "target-reached",
            TerminalStatus::IterBudget => "iter-budget",
            TerminalStatus::TimeBudget => "time-budget",
            TerminalStatus::Converged => "converged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub iter: usize,
    pub elapsed_s: f64,
    /// Unsmoothed `f_tau` at the iterate.
    pub objective: f64,
    pub nnz_x: usize,
    /// Cumulative matvec equivalents.
    pub matvecs: f64,
    /// PCG iterations of the step (Newton-CG) or backtracks (FISTA/ISTA).
    pub extra: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceTotals {
    pub iterations: usize,
    pub matvecs: f64,
    pub pcg_iterations: usize,
    pub newton_steps: usize,
    pub backtracks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub solver: SolverKind,
    pub samples: Vec<TraceSample>,
    pub status: TerminalStatus,
    pub totals: TraceTotals,
}

impl SolverTrace {
    pub fn final_objective(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.objective)
    }

    pub fn elapsed_s(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.elapsed_s)
    }

    /// Wall time at which the target was reached, if it was.
    pub fn time_to_target(&self) -> Option<f64> {
        (self.status == TerminalStatus::TargetReached).then(|| self.elapsed_s())
    }

    /// Mean PCG iterations per Newton step.
    pub fn mean_pcg_per_step(&self) -> Option<f64> {
        (self.totals.newton_steps > 0).then(|| self.totals.pcg_iterations as f64 / self.totals.newton_steps as f64)
    }
}

/// Shared clock, sampling and stopping logic.
pub(crate) struct Recorder<'a> {
    cfg: &'a SolverConfig,
    start: Instant,
    last_elapsed: f64,
    samples: Vec<TraceSample>,
}

impl<'a> Recorder<'a> {
    pub fn new(cfg: &'a SolverConfig) -> Self {
        Recorder {
            cfg,
            start: Instant::now(),
            last_elapsed: 0.0,
            samples: Vec::new(),
        }
    }

    pub fn elapsed(&mut self) -> f64 {
        // Instant is monotonic; max() guards float rounding only
        let e = self.start.elapsed().as_secs_f64().max(self.last_elapsed);
        self.last_elapsed = e;
        e
    }

    /// Stopping status after `iter` iterations at objective `f`.
    pub fn stop(&mut self, iter: usize, f: f64) -> Option<TerminalStatus> {
        if self.cfg.target_objective.is_some_and(|t| f <= t) {
            return Some(TerminalStatus::TargetReached);
        }
        if iter >= self.cfg.max_iters {
            return Some(TerminalStatus::IterBudget);
        }
        if self.cfg.max_seconds.is_some_and(|s| self.elapsed() >= s) {
            return Some(TerminalStatus::TimeBudget);
        }
        None
    }

    pub fn record(&mut self, iter: usize, objective: f64, nnz_x: usize, matvecs: f64, extra: usize) {
        let elapsed_s = self.elapsed();
        self.samples.push(TraceSample {
            iter,
            elapsed_s,
            objective,
            nnz_x,
            matvecs,
            extra,
        });
    }

    pub fn finish(self, solver: SolverKind, status: TerminalStatus, totals: TraceTotals) -> SolverTrace {
        SolverTrace {
            solver,
            samples: self.samples,
            status,
            totals,
        }
    }
}
