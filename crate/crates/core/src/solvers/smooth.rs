//! Pseudo-Huber smoothing `psi_mu(x) = sum sqrt(mu^2 + x_i^2) - mu` and the
//! derivatives of `f_mu(x) = tau psi_mu(x) + 1/2 ||Ax - b||^2`.

use super::{residual_sq, SolverError};
use crate::instance::ProblemInstance;

pub fn pseudo_huber(x: &[f64], mu: f64) -> f64 {
    x.iter().map(|&v| huber_term(v, mu)).sum()
}

// sqrt(mu^2 + v^2) - mu written to avoid cancellation for |v| << mu
#[inline]
pub(crate) fn huber_term(v: f64, mu: f64) -> f64 {
    let r = mu.hypot(v);
    v * v / (r + mu)
}

#[inline]
pub(crate) fn huber_grad(v: f64, mu: f64) -> f64 {
    v / mu.hypot(v)
}

#[inline]
pub(crate) fn huber_curvature(v: f64, mu: f64) -> f64 {
    let r = mu.hypot(v);
    mu * mu / (r * r * r)
}

pub fn smoothed_objective(inst: &ProblemInstance, x: &[f64], mu: f64) -> Result<f64, SolverError> {
    let ax = inst.op.matvec(x)?;
    Ok(inst.tau * pseudo_huber(x, mu) + 0.5 * residual_sq(&ax, &inst.b))
}

/// `tau grad psi_mu(x) + A^T (Ax - b)`.
pub fn grad_smoothed(inst: &ProblemInstance, x: &[f64], mu: f64) -> Result<Vec<f64>, SolverError> {
    let mut r = inst.op.matvec(x)?;
    for (ri, bi) in r.iter_mut().zip(&inst.b) {
        *ri -= bi;
    }
    let mut g = inst.op.rmatvec(&r)?;
    for (gi, &xi) in g.iter_mut().zip(x) {
        *gi += inst.tau * huber_grad(xi, mu);
    }
    Ok(g)
}

/// `tau diag(psi_mu''(x)) v + A^T A v`, two matvecs.
pub fn hessvec_smoothed(inst: &ProblemInstance, x: &[f64], mu: f64, v: &[f64]) -> Result<Vec<f64>, SolverError> {
    let av = inst.op.matvec(v)?;
    let mut out = inst.op.rmatvec(&av)?;
    for ((o, &xi), &vi) in out.iter_mut().zip(x).zip(v) {
        *o += inst.tau * huber_curvature(xi, mu) * vi;
    }
    Ok(out)
}
