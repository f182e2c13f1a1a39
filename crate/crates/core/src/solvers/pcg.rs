use super::{dot, norm2, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub struct PcgOutcome {
    /// Last iterate.
    pub step: Vec<f64>,
    pub iterations: usize,
    /// Relative residual of the best iterate after each iteration,
    /// starting with the zero initial guess (always 1).
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub negative_curvature: bool,
}

/// Preconditioned conjugate gradients for `H s = rhs` from `s = 0`.
///
/// `inv_diag` holds the diagonal preconditioner `M^{-1}` (entries > 0).
/// Stops once `||H s - rhs|| <= eta ||rhs||` or after `max_iters`
/// products. The last iterate is returned since CG reduces the
/// `H`-norm error monotonically; `residual_history` tracks the best
/// relative residual seen, which is nonincreasing. A direction with `p^T H p <= 0`
/// stops early and sets `negative_curvature`.
pub fn pcg_solve<F>(
    mut hessvec: F,
    rhs: &[f64],
    inv_diag: &[f64],
    eta: f64,
    max_iters: usize,
) -> Result<PcgOutcome, SolverError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, SolverError>,
{
    let n = rhs.len();
    if inv_diag.len() != n {
        return Err(SolverError::InvalidConfig(format!(
            "preconditioner has length {}, expected {n}",
            inv_diag.len()
        )));
    }
    if let Some(v) = inv_diag.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(SolverError::InvalidConfig(format!(
            "preconditioner entry {v} must be positive"
        )));
    }
    let rhs_norm = norm2(rhs);
    let mut s = vec![0.0; n];
    let mut history = vec![1.0];
    if rhs_norm == 0.0 {
        return Ok(PcgOutcome {
            step: s,
            iterations: 0,
            residual_history: history,
            converged: true,
            negative_curvature: false,
        });
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut best_rel = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut negative_curvature = false;

    while iterations < max_iters {
        let hp = hessvec(&p)?;
        iterations += 1;
        let curv = dot(&p, &hp);
        if !(curv > 0.0) {
            if curv.is_nan() {
                return Err(SolverError::PcgBreakdown { iterations });
            }
            negative_curvature = true;
            history.push(best_rel);
            break;
        }
        let alpha = rz / curv;
        for ((si, ri), (pi, hpi)) in s.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&hp)) {
            *si += alpha * pi;
            *ri -= alpha * hpi;
        }
        let rel = norm2(&r) / rhs_norm;
        if !rel.is_finite() || s.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::PcgBreakdown { iterations });
        }
        best_rel = best_rel.min(rel);
        history.push(best_rel);
        if rel <= eta {
            converged = true;
            break;
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(inv_diag) {
            *zi = ri * di;
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(PcgOutcome {
        step: s,
        iterations,
        residual_history: history,
        converged,
        negative_curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_op(d: Vec<f64>) -> impl FnMut(&[f64]) -> Result<Vec<f64>, SolverError> {
        move |v: &[f64]| Ok(v.iter().zip(&d).map(|(a, b)| a * b).collect())
    }

    #[test]
    fn identity_in_one_iteration() {
        let rhs = vec![1.0, -2.0, 3.0];
        let out = pcg_solve(diag_op(vec![1.0; 3]), &rhs, &[1.0; 3], 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.step, rhs);
        assert!(out.converged);
    }

    #[test]
    fn perfect_preconditioner_in_one_iteration() {
        let d = vec![2.0, 5.0, 0.5, 100.0];
        let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        let rhs = vec![1.0, 1.0, 1.0, 1.0];
        let out = pcg_solve(diag_op(d.clone()), &rhs, &inv, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        for ((s, r), di) in out.step.iter().zip(&rhs).zip(&d) {
            assert!((s - r / di).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_curvature_is_flagged() {
        let out = pcg_solve(diag_op(vec![-1.0, 1.0]), &[1.0, 0.0], &[1.0, 1.0], 1e-6, 10).unwrap();
        assert!(out.negative_curvature);
        assert!(!out.converged);
    }

    #[test]
    fn zero_rhs_returns_zero_step() {
        let out = pcg_solve(diag_op(vec![1.0, 2.0]), &[0.0, 0.0], &[1.0, 1.0], 0.1, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.step, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_nonpositive_preconditioner() {
        assert!(pcg_solve(diag_op(vec![1.0]), &[1.0], &[0.0], 0.1, 10).is_err());
    }
}
