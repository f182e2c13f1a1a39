//! Minimizers of `f_tau(x) = tau ||x||_1 + 1/2 ||Ax - b||^2` over the
//! implicit operator, each emitting a [`SolverTrace`].
//!
//! Cost is tracked in matvec equivalents: one product with `A` or `A^T`
//! counts as one, a full coordinate-descent sweep as two.

mod cdm;
mod first_order;
mod newton;
mod pcg;
mod smooth;
mod trace;

pub use cdm::{cdm_beta, cdm_run};
pub use first_order::{fista_run, ista_run};
pub use newton::pdncg_run;
pub use pcg::{pcg_solve, PcgOutcome};
pub use smooth::{grad_smoothed, hessvec_smoothed, pseudo_huber, smoothed_objective};
pub use trace::{SolverTrace, TerminalStatus, TraceSample, TraceTotals};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::ProblemInstance;
use crate::operator::OperatorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("objective became non-finite ({value}) at iteration {iter}; step size too large?")]
    Divergence { iter: usize, value: f64 },
    #[error("conjugate gradients broke down after {iterations} iterations (non-finite iterate)")]
    PcgBreakdown { iterations: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ista,
    Fista,
    #[serde(alias = "pcdm")]
    Cdm,
    #[serde(alias = "newton-cg")]
    Pdncg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Ista, SolverKind::Fista, SolverKind::Cdm, SolverKind::Pdncg];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ista => "ista",
            SolverKind::Fista => "fista",
            SolverKind::Cdm => "cdm",
            SolverKind::Pdncg => "pdncg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ista" => Ok(SolverKind::Ista),
            "fista" => Ok(SolverKind::Fista),
            "cdm" | "pcdm" => Ok(SolverKind::Cdm),
            "pdncg" | "newton-cg" => Ok(SolverKind::Pdncg),
            other => Err(SolverError::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }
}

/// Step-size rule for ISTA/FISTA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LipschitzPolicy {
    /// `L = lambda_max(A^T A)` (or its upper bound for block operators).
    #[default]
    Exact,
    /// Doubling until the quadratic model majorizes, halving after each
    /// accepted step.
    Backtracking,
}

/// Curvature of the smoothing term used in the Newton-CG system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NewtonHessian {
    /// `tau psi_mu''(x)`.
    Exact,
    /// `tau (1 - y_i x_i / r_i) / r_i`, `r_i = sqrt(mu^2 + x_i^2)`, with a
    /// dual estimate `y` of `grad psi_mu(x)` projected onto `[-1, 1]`.
    #[default]
    PrimalDual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Iterations for ISTA/FISTA, sweeps of `n` updates for CDM, Newton
    /// steps for pdNCG.
    pub max_iters: usize,
    pub max_seconds: Option<f64>,
    pub target_objective: Option<f64>,
    /// Pseudo-Huber smoothing parameter.
    pub mu: f64,
    /// PCG relative-residual tolerance.
    pub eta: f64,
    pub pcg_max_iters: usize,
    pub ls_max_backtracks: usize,
    pub lipschitz: LipschitzPolicy,
    pub hessian: NewtonHessian,
    /// Modeled processor count for the coordinate-descent step damping.
    pub processors: usize,
    /// Degree of partial separability; computed from `A` when `None`.
    pub omega: Option<usize>,
    /// Newton-CG stops once `||grad f_mu|| <= grad_tol * max(1, ||A^T b||)`.
    pub grad_tol: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        SolverConfig {
            kind,
            max_iters: match kind {
                SolverKind::Pdncg => 200,
                SolverKind::Cdm => 100_000,
                _ => 1_000_000,
            },
            max_seconds: None,
            target_objective: None,
            mu: 1e-5,
            eta: 1e-1,
            pcg_max_iters: 10_000,
            ls_max_backtracks: 50,
            lipschitz: LipschitzPolicy::Exact,
            hessian: NewtonHessian::PrimalDual,
            processors: 1,
            omega: None,
            grad_tol: 1e-8,
            seed: 0,
        }
    }

    pub fn with_max_iters(mut self, k: usize) -> Self {
        self.max_iters = k;
        self
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_objective = Some(target);
        self
    }

    pub fn with_max_seconds(mut self, s: f64) -> Self {
        self.max_seconds = Some(s);
        self
    }

    pub fn validate(&self, n: usize) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if self.processors < 1 {
            return bad("processor count must be at least 1".into());
        }
        if let Some(w) = self.omega {
            if w < 1 || w > n.max(1) {
                return bad(format!("omega must lie in [1, {n}], got {w}"));
            }
        }
        if let Some(s) = self.max_seconds {
            if !(s > 0.0) {
                return bad(format!("max_seconds must be positive, got {s}"));
            }
        }
        if !(self.grad_tol >= 0.0) {
            return bad(format!("grad_tol must be nonnegative, got {}", self.grad_tol));
        }
        Ok(())
    }
}

/// Final iterate and the trace that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub trace: SolverTrace,
}

/// Runs the solver named in `cfg`.
pub fn solve(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    match cfg.kind {
        SolverKind::Ista => ista_run(inst, cfg),
        SolverKind::Fista => fista_run(inst, cfg),
        SolverKind::Cdm => cdm_run(inst, cfg),
        SolverKind::Pdncg => pdncg_run(inst, cfg),
    }
}

/// `f_tau(x) = tau ||x||_1 + 1/2 ||Ax - b||^2`, one matvec.
pub fn objective(inst: &ProblemInstance, x: &[f64]) -> Result<f64, SolverError> {
    let ax = inst.op.matvec(x)?;
    Ok(objective_from_product(inst.tau, x, &ax, &inst.b))
}

pub(crate) fn objective_from_product(tau: f64, x: &[f64], ax: &[f64], b: &[f64]) -> f64 {
    tau * l1(x) + 0.5 * residual_sq(ax, b)
}

pub(crate) fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub(crate) fn residual_sq(ax: &[f64], b: &[f64]) -> f64 {
    ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn nnz(x: &[f64]) -> usize {
    x.iter().filter(|v| **v != 0.0).count()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sign(v) max(|v| - t, 0)`, the minimizer of `t|y| + 1/2 (y - v)^2`.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
