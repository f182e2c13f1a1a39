use super::pcg::pcg_solve;
use super::smooth::{huber_curvature, huber_grad, huber_term};
use super::trace::Recorder;
use super::{
    dot, l1, nnz, norm2, residual_sq, NewtonHessian, SolveResult, SolverConfig, SolverError, SolverKind,
    TerminalStatus, TraceTotals,
};
use crate::instance::ProblemInstance;

const ARMIJO_SLOPE: f64 = 1e-4;
const BACKTRACK_FACTOR: f64 = 0.5;

/// Newton-CG on the pseudo-Huber smoothed objective.
///
/// Each outer step solves `H d = -grad f_mu(x)` inexactly by PCG, with
/// `H = tau W + A^T A` and the inverse of its diagonal as preconditioner,
/// then backtracks on `f_mu` (Armijo, factor 1/2). When the backtracking
/// cap is hit the last trial point is accepted anyway, so the recorded
/// `f_tau` need not decrease monotonically.
///
/// `W` is `psi_mu''(x)` for [`NewtonHessian::Exact`]. The primal-dual
/// variant keeps `y ~ grad psi_mu(x)` in `[-1, 1]` and uses
/// `W_i = (1 - y_i x_i / r_i) / r_i`; after each direction `y` moves to
/// `x / r + W d`, projected.
pub fn pdncg_run(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    let (m, n) = (inst.m(), inst.n());
    cfg.validate(n)?;
    let mut rec = Recorder::new(cfg);
    let tau = inst.tau;
    let mu = cfg.mu;
    let b = &inst.b;
    let diag_ata = inst.op.diag_ata();

    let mut totals = TraceTotals::default();
    let atb = inst.op.rmatvec(b)?;
    totals.matvecs += 1.0;
    let grad_stop = cfg.grad_tol * norm2(&atb).max(1.0);

    let smoothed =
        |x: &[f64], ax: &[f64]| tau * x.iter().map(|&v| huber_term(v, mu)).sum::<f64>() + 0.5 * residual_sq(ax, b);

    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; m];
    let mut resid = vec![0.0; m];
    let mut grad = vec![0.0; n];
    let mut ad = vec![0.0; m];
    let mut trial = vec![0.0; n];
    let mut a_trial = vec![0.0; m];
    // dual estimate of grad psi_mu(x), kept in [-1, 1]
    let mut dual = vec![0.0; n];
    let mut weights = vec![0.0; n];

    let mut f = tau * l1(&x) + 0.5 * residual_sq(&ax, b);
    rec.record(0, f, 0, totals.matvecs, 0);
    let mut step = 0;
    let status = loop {
        for ((r, a), bi) in resid.iter_mut().zip(&ax).zip(b) {
            *r = a - bi;
        }
        inst.op.rmatvec_into(&resid, &mut grad)?;
        totals.matvecs += 1.0;
        for (g, &xi) in grad.iter_mut().zip(&x) {
            *g += tau * huber_grad(xi, mu);
        }
        if let Some(s) = rec.stop(step, f) {
            break s;
        }
        if norm2(&grad) <= grad_stop {
            break TerminalStatus::Converged;
        }

        step += 1;
        for ((w, &xi), &yi) in weights.iter_mut().zip(&x).zip(&dual) {
            *w = match cfg.hessian {
                NewtonHessian::Exact => huber_curvature(xi, mu),
                NewtonHessian::PrimalDual => {
                    let r = mu.hypot(xi);
                    (1.0 - yi * xi / r) / r
                }
            };
        }
        let inv_diag: Vec<f64> = weights
            .iter()
            .zip(&diag_ata)
            .map(|(&w, &d)| 1.0 / (tau * w + d))
            .collect();
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut hv_count = 0.0;
        let outcome = pcg_solve(
            |v: &[f64]| {
                let av = inst.op.matvec(v)?;
                let mut out = inst.op.rmatvec(&av)?;
                hv_count += 2.0;
                for ((o, &w), &vi) in out.iter_mut().zip(&weights).zip(v) {
                    *o += tau * w * vi;
                }
                Ok(out)
            },
            &neg_grad,
            &inv_diag,
            cfg.eta,
            cfg.pcg_max_iters,
        )?;
        totals.matvecs += hv_count;
        totals.pcg_iterations += outcome.iterations;
        let mut dir = outcome.step;
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            // PCG returned nothing useful; fall back to the scaled gradient
            for ((d, g), w) in dir.iter_mut().zip(&grad).zip(&inv_diag) {
                *d = -g * w;
            }
            slope = dot(&grad, &dir);
        }
        inst.op.matvec_into(&dir, &mut ad)?;
        totals.matvecs += 1.0;

        if cfg.hessian == NewtonHessian::PrimalDual {
            for (((yi, &xi), &w), &di) in dual.iter_mut().zip(&x).zip(&weights).zip(&dir) {
                let r = mu.hypot(xi);
                *yi = (xi / r + w * di).clamp(-1.0, 1.0);
            }
        }

        let f_mu = smoothed(&x, &ax);
        let mut alpha = 1.0;
        let mut backtracks = 0;
        loop {
            for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&dir) {
                *t = xi + alpha * di;
            }
            for ((t, a), d) in a_trial.iter_mut().zip(&ax).zip(&ad) {
                *t = a + alpha * d;
            }
            let f_trial = smoothed(&trial, &a_trial);
            if f_trial <= f_mu + ARMIJO_SLOPE * alpha * slope || backtracks >= cfg.ls_max_backtracks {
                break;
            }
            alpha *= BACKTRACK_FACTOR;
            backtracks += 1;
        }
        totals.backtracks += backtracks;
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut ax, &mut a_trial);

        f = tau * l1(&x) + 0.5 * residual_sq(&ax, b);
        if !f.is_finite() {
            return Err(SolverError::Divergence { iter: step, value: f });
        }
        totals.newton_steps = step;
        rec.record(step, f, nnz(&x), totals.matvecs, outcome.iterations);
    };
    totals.iterations = step;
    totals.newton_steps = step;
    Ok(SolveResult {
        x,
        trace: rec.finish(SolverKind::Pdncg, status, totals),
    })
}
