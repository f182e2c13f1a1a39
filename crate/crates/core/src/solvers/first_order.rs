use super::trace::Recorder;
use super::{
    dot, l1, nnz, residual_sq, soft_threshold, LipschitzPolicy, SolveResult, SolverConfig, SolverError, SolverKind,
    TerminalStatus, TraceTotals,
};
use crate::instance::ProblemInstance;

/// Proximal gradient: `x+ = shrink(x - A^T(Ax - b)/L, tau/L)`.
pub fn ista_run(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    proximal_gradient(inst, cfg, false, SolverKind::Ista)
}

/// Accelerated proximal gradient with the FISTA momentum sequence.
pub fn fista_run(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    proximal_gradient(inst, cfg, true, SolverKind::Fista)
}

fn sampled(iter: usize) -> bool {
    iter <= 1000 || iter.is_multiple_of(10)
}

fn proximal_gradient(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    accelerated: bool,
    kind: SolverKind,
) -> Result<SolveResult, SolverError> {
    let (m, n) = (inst.m(), inst.n());
    cfg.validate(n)?;
    let mut rec = Recorder::new(cfg);
    let tau = inst.tau;
    let b = &inst.b;

    // x0 = 0, so A x0 = 0 without a product
    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; m];
    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut t = 1.0f64;
    let mut lip = match cfg.lipschitz {
        LipschitzPolicy::Exact => inst.op.lipschitz_upper(),
        LipschitzPolicy::Backtracking => 1.0,
    };

    let mut totals = TraceTotals::default();
    let mut f = 0.5 * residual_sq(&ax, b);
    rec.record(0, f, 0, 0.0, 0);
    let mut status = rec.stop(0, f);

    let mut resid = vec![0.0; m];
    let mut grad = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; m];
    let mut iter = 0;
    while status.is_none() {
        iter += 1;
        for ((r, a), bi) in resid.iter_mut().zip(&ay).zip(b) {
            *r = a - bi;
        }
        inst.op.rmatvec_into(&resid, &mut grad)?;
        totals.matvecs += 1.0;
        let smooth_y = 0.5 * dot(&resid, &resid);

        let mut backtracks = 0;
        loop {
            let step = 1.0 / lip;
            for ((pi, yi), gi) in p.iter_mut().zip(&y).zip(&grad) {
                *pi = soft_threshold(yi - step * gi, tau * step);
            }
            inst.op.matvec_into(&p, &mut ap)?;
            totals.matvecs += 1.0;
            if cfg.lipschitz == LipschitzPolicy::Exact {
                break;
            }
            let smooth_p = 0.5 * residual_sq(&ap, b);
            let mut lin = 0.0;
            let mut dist = 0.0;
            for ((pi, yi), gi) in p.iter().zip(&y).zip(&grad) {
                let d = pi - yi;
                lin += gi * d;
                dist += d * d;
            }
            let model = smooth_y + lin + 0.5 * lip * dist;
            if smooth_p <= model + 1e-12 * smooth_y.abs().max(1.0) || backtracks >= cfg.ls_max_backtracks {
                break;
            }
            lip *= 2.0;
            backtracks += 1;
        }
        totals.backtracks += backtracks;

        f = tau * l1(&p) + 0.5 * residual_sq(&ap, b);
        if !f.is_finite() {
            return Err(SolverError::Divergence { iter, value: f });
        }

        if accelerated {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for ((yi, pi), xi) in y.iter_mut().zip(&p).zip(&x) {
                *yi = pi + beta * (pi - xi);
            }
            for ((ayi, api), axi) in ay.iter_mut().zip(&ap).zip(&ax) {
                *ayi = api + beta * (api - axi);
            }
            t = t_next;
        } else {
            y.copy_from_slice(&p);
            ay.copy_from_slice(&ap);
        }
        std::mem::swap(&mut x, &mut p);
        std::mem::swap(&mut ax, &mut ap);
        if cfg.lipschitz == LipschitzPolicy::Backtracking {
            lip *= 0.5;
        }

        status = rec.stop(iter, f);
        if status.is_some() || sampled(iter) {
            rec.record(iter, f, nnz(&x), totals.matvecs, backtracks);
        }
    }
    totals.iterations = iter;
    let status = status.unwrap_or(TerminalStatus::IterBudget);
    Ok(SolveResult {
        x,
        trace: rec.finish(kind, status, totals),
    })
}
