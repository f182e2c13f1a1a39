use rand::seq::SliceRandom;

use super::trace::Recorder;
use super::{l1, nnz, soft_threshold, SolveResult, SolverConfig, SolverError, SolverKind, TerminalStatus, TraceTotals};
use crate::instance::ProblemInstance;
use crate::rng;

/// Exact residual refresh period, in sweeps.
const REFRESH_SWEEPS: usize = 50;

/// Step damping `beta = 1 + (omega - 1)(processors - 1)/(n - 1)`.
pub fn cdm_beta(omega: usize, processors: usize, n: usize) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    1.0 + (omega as f64 - 1.0) * (processors as f64 - 1.0) / (n as f64 - 1.0)
}

/// Serial randomized coordinate descent with the separable model
/// `g_i (y_i - x_i) + beta L_i / 2 (y_i - x_i)^2 + tau |y_i|`,
/// `L_i = (A^T A)_ii`.
///
/// Each sweep visits all coordinates in a fresh uniformly random order.
/// The residual `Ax - b` is updated column by column and recomputed
/// exactly every 50 sweeps. One trace iteration is one sweep.
pub fn cdm_run(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    let n = inst.n();
    cfg.validate(n)?;
    let mut rec = Recorder::new(cfg);
    let tau = inst.tau;

    let csc = inst.op.to_csc();
    let lips = inst.op.diag_ata();
    let omega = cfg.omega.unwrap_or_else(|| csc.max_row_nnz().max(1));
    let beta = cdm_beta(omega, cfg.processors, n);
    let mut rng = rng::seeded(cfg.seed);

    let mut x = vec![0.0; n];
    let mut resid: Vec<f64> = inst.b.iter().map(|b| -b).collect();
    let mut totals = TraceTotals::default();
    let mut f = 0.5 * resid.iter().map(|r| r * r).sum::<f64>();
    rec.record(0, f, 0, 0.0, 0);
    let mut status = rec.stop(0, f);

    let mut order: Vec<usize> = (0..n).collect();
    let mut sweep = 0;
    while status.is_none() {
        sweep += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            let li = lips[i];
            if li <= 0.0 {
                continue;
            }
            let g = csc.column_dot(i, &resid);
            let bl = beta * li;
            let new = soft_threshold(x[i] - g / bl, tau / bl);
            let delta = new - x[i];
            if delta != 0.0 {
                csc.column_axpy(i, delta, &mut resid);
                x[i] = new;
            }
        }
        totals.matvecs += 2.0;
        if sweep % REFRESH_SWEEPS == 0 {
            inst.op.matvec_into(&x, &mut resid)?;
            for (r, b) in resid.iter_mut().zip(&inst.b) {
                *r -= b;
            }
            totals.matvecs += 1.0;
        }
        f = tau * l1(&x) + 0.5 * resid.iter().map(|r| r * r).sum::<f64>();
        if !f.is_finite() {
            return Err(SolverError::Divergence { iter: sweep, value: f });
        }
        status = rec.stop(sweep, f);
        rec.record(sweep, f, nnz(&x), totals.matvecs, 0);
    }
    totals.iterations = sweep;
    Ok(SolveResult {
        x,
        trace: rec.finish(SolverKind::Cdm, status.unwrap_or(TerminalStatus::IterBudget), totals),
    })
}
