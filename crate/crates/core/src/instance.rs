//! Right-hand sides that make a planted sparse vector the exact minimizer
//! of `tau ||x||_1 + 1/2 ||Ax - b||^2`.
//!
//! Optimality of `x*` is `A^T (A x* - b) = -tau g` for some subgradient
//! `g` of `||x*||_1`. Writing `e = b - A x*`, the tall case solves
//! `A^T e = tau g` with `e = tau A (A^T A)^{-1} g`. The wide case fixes
//! `e = tau B^{-T} g` on a square block and rescales the remaining columns
//! so that `|N~_i^T e| <= tau`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::operator::{BlockOperator, DenseMatrix, Operator, OperatorError, OperatorSpec};
use crate::solution::{ConditioningReport, SparseSolution, DEFAULT_RHO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("tau must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("m = {m} < n = {n}: use the wide generator (igen2) instead")]
    WrongGenerator { m: usize, n: usize },
    #[error("invalid support: {0}")]
    InvalidSupport(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// How subgradient entries at zero components of `x*` are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroFill {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
}

impl Default for ZeroFill {
    /// Strictly inside `[-1, 1]`, which keeps every zero of `x*` inactive
    /// and the planted minimizer unique.
    fn default() -> Self {
        ZeroFill::Uniform { lo: -0.9, hi: 0.9 }
    }
}

/// Scale factor source for the extension columns of the wide generator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum XiPolicy {
    Constant(f64),
    /// Uniform on `(-1, 1)`, redrawing `|xi| < 1e-3`.
    #[default]
    Uniform,
}

const XI_FLOOR: f64 = 1e-3;

/// Element of `d||x*||_1`: `sign(x*_i)` on the support, policy-filled
/// elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient(pub Vec<f64>);

pub fn subgradient_of<R: Rng + ?Sized>(x_star: &SparseSolution, zero_fill: ZeroFill, rng: &mut R) -> Subgradient {
    subgradient_prefix(x_star, x_star.n(), zero_fill, rng)
}

/// Subgradient of the first `len` components of `x*`.
fn subgradient_prefix<R: Rng + ?Sized>(
    x_star: &SparseSolution,
    len: usize,
    zero_fill: ZeroFill,
    rng: &mut R,
) -> Subgradient {
    let mut g: Vec<f64> = (0..len)
        .map(|_| match zero_fill {
            ZeroFill::Constant(c) => c,
            ZeroFill::Uniform { lo, hi } => rng.random_range(lo..=hi),
        })
        .collect();
    for (i, v) in x_star.iter().filter(|(i, _)| *i < len) {
        g[i] = v.signum();
    }
    Subgradient(g)
}

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub generator: String,
    pub seeds: BTreeMap<String, u64>,
    pub conditioning: Option<ConditioningReport>,
}

/// An l1-regularized least-squares problem with known minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub tau: f64,
    pub op: Operator,
    pub b: Vec<f64>,
    pub x_star: SparseSolution,
    /// `||b - A x*||_2` at generation time.
    pub noise_norm: f64,
    pub provenance: Provenance,
}

impl ProblemInstance {
    /// Assembles an instance from parts without any optimality guarantee.
    pub fn new(tau: f64, op: Operator, b: Vec<f64>, x_star: SparseSolution) -> Result<Self, InstanceError> {
        check_tau(tau)?;
        if b.len() != op.nrows() {
            return Err(InstanceError::Dimension(format!(
                "b has length {}, operator has {} rows",
                b.len(),
                op.nrows()
            )));
        }
        if x_star.n() != op.ncols() {
            return Err(InstanceError::Dimension(format!(
                "x* has length {}, operator has {} columns",
                x_star.n(),
                op.ncols()
            )));
        }
        let ax = op.matvec(&x_star.to_dense())?;
        let noise_norm = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>());
        Ok(ProblemInstance {
            tau,
            op,
            b,
            x_star,
            noise_norm,
            provenance: Provenance::default(),
        })
    }

    pub fn m(&self) -> usize {
        self.op.nrows()
    }

    pub fn n(&self) -> usize {
        self.op.ncols()
    }

    /// `kappa(A^T A)` for the tall factored form; for the wide form, the
    /// condition number of the square block.
    pub fn kappa_ata(&self) -> f64 {
        match &self.op {
            Operator::Factored(s) => s.spectrum().kappa_ata(),
            Operator::Block(b) => b.basis().spectrum().kappa_ata(),
        }
    }

    /// Tolerance factor `1e-8 kappa^{1/2}` used with [`verify_optimality`].
    pub fn certificate_tolerance(&self) -> f64 {
        1e-8 * self.kappa_ata().sqrt()
    }
}

fn check_tau(tau: f64) -> Result<(), InstanceError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(InstanceError::InvalidTau(tau));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Tall generator (`m >= n`): `b = A x* + tau A (A^T A)^{-1} g`.
pub fn igen<R: Rng + ?Sized>(
    tau: f64,
    op: impl Into<Operator>,
    x_star: SparseSolution,
    zero_fill: ZeroFill,
    rng: &mut R,
) -> Result<ProblemInstance, InstanceError> {
    check_tau(tau)?;
    let op = op.into();
    let spec = match &op {
        Operator::Factored(s) => s,
        Operator::Block(b) => {
            return Err(InstanceError::WrongGenerator { m: b.m(), n: b.n() });
        }
    };
    if x_star.n() != spec.n() {
        return Err(InstanceError::Dimension(format!(
            "x* has length {}, operator has {} columns",
            x_star.n(),
            spec.n()
        )));
    }
    let g = subgradient_of(&x_star, zero_fill, rng);
    let e = noise_for(spec, tau, &g.0)?;
    let mut b = spec.matvec(&x_star.to_dense())?;
    for (bi, ei) in b.iter_mut().zip(&e) {
        *bi += ei;
    }
    let conditioning = ConditioningReport::compute(spec, &x_star, DEFAULT_RHO).ok();
    Ok(ProblemInstance {
        tau,
        b,
        noise_norm: norm(&e),
        x_star,
        provenance: Provenance {
            generator: "igen".into(),
            seeds: BTreeMap::new(),
            conditioning,
        },
        op,
    })
}

/// `e = tau A (A^T A)^{-1} g`, the least-norm solution of `A^T e = tau g`.
fn noise_for(spec: &OperatorSpec, tau: f64, g: &[f64]) -> Result<Vec<f64>, OperatorError> {
    let scaled: Vec<f64> = g.iter().map(|v| tau * v).collect();
    let w = spec.apply_ata_inverse(&scaled)?;
    spec.matvec(&w)
}

/// Wide generator (`m < n`): returns `A = [B, N~]` and `b = A x* + e` with
/// `e = tau B^{-T} g` and `N~_i = xi tau / |N_i^T e| N_i`.
///
/// The support of `x*` must lie in the first `m` coordinates. A column
/// with `|N_i^T e| <= 1e-12 ||N_i|| ||e||` is replaced by a Gaussian draw
/// from `rng`.
pub fn igen2<R: Rng + ?Sized>(
    tau: f64,
    basis: OperatorSpec,
    columns: DenseMatrix,
    x_star: SparseSolution,
    zero_fill: ZeroFill,
    xi: XiPolicy,
    rng: &mut R,
) -> Result<ProblemInstance, InstanceError> {
    check_tau(tau)?;
    let m = basis.m();
    if basis.n() != m {
        return Err(InstanceError::Dimension(format!(
            "basis block must be square, got {} x {}",
            m,
            basis.n()
        )));
    }
    if columns.rows() != m {
        return Err(InstanceError::Dimension(format!(
            "extension columns have {} rows, expected {m}",
            columns.rows()
        )));
    }
    let n = m + columns.cols();
    if n <= m {
        return Err(InstanceError::Dimension("wide generator needs n > m".into()));
    }
    if x_star.n() != n {
        return Err(InstanceError::Dimension(format!(
            "x* has length {}, expected {n}",
            x_star.n()
        )));
    }
    if x_star.nnz() > m {
        return Err(InstanceError::InvalidSupport(format!(
            "support size {} exceeds m = {m}",
            x_star.nnz()
        )));
    }
    if let Some(&i) = x_star.support().iter().find(|&&i| i >= m) {
        return Err(InstanceError::InvalidSupport(format!(
            "support index {i} outside the leading {m} coordinates"
        )));
    }
    if let XiPolicy::Constant(c) = xi {
        if !(c.abs() <= 1.0) {
            return Err(InstanceError::Dimension(format!("xi = {c} outside [-1, 1]")));
        }
    }

    let g = subgradient_prefix(&x_star, m, zero_fill, rng);
    // B square: B (B^T B)^{-1} = B^{-T}
    let e = noise_for(&basis, tau, &g.0)?;
    let e_norm = norm(&e);

    let mut data = columns.as_col_major().to_vec();
    for col in data.chunks_exact_mut(m) {
        if e_norm == 0.0 {
            // every column already satisfies N_i^T e = 0
            continue;
        }
        let mut dot: f64 = col.iter().zip(&e).map(|(a, b)| a * b).sum();
        while dot.abs() <= 1e-12 * norm(col) * e_norm {
            for v in col.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            dot = col.iter().zip(&e).map(|(a, b)| a * b).sum();
        }
        let xi_k = match xi {
            XiPolicy::Constant(c) => c,
            XiPolicy::Uniform => loop {
                let v: f64 = rng.random_range(-1.0..1.0);
                if v.abs() >= XI_FLOOR && v.abs() < 1.0 {
                    break v;
                }
            },
        };
        let scale = xi_k * tau / dot.abs();
        for v in col.iter_mut() {
            *v *= scale;
        }
    }
    let op = Operator::Block(BlockOperator::new(basis, DenseMatrix::from_col_major(m, n - m, data))?);
    let mut b = op.matvec(&x_star.to_dense())?;
    for (bi, ei) in b.iter_mut().zip(&e) {
        *bi += ei;
    }
    Ok(ProblemInstance {
        tau,
        op,
        b,
        x_star,
        noise_norm: e_norm,
        provenance: Provenance {
            generator: "igen2".into(),
            seeds: BTreeMap::new(),
            conditioning: None,
        },
    })
}

/// Outcome of checking `A^T (A x* - b) in -tau d||x*||_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    /// `max_{i in S} |r_i + tau sign(x*_i)|`.
    pub support_residual: f64,
    /// `max_{i not in S} max(|r_i| - tau, 0)`.
    pub off_support_excess: f64,
    /// `tol * tau`; both quantities must not exceed it.
    pub threshold: f64,
    pub passed: bool,
}

/// Evaluates the optimality certificate of the planted solution with
/// `r = A^T (A x* - b)`. Passes iff both violations are at most `tol * tau`.
pub fn verify_optimality(inst: &ProblemInstance, tol: f64) -> Result<CertificateReport, InstanceError> {
    let mut resid = inst.op.matvec(&inst.x_star.to_dense())?;
    for (r, b) in resid.iter_mut().zip(&inst.b) {
        *r -= b;
    }
    let r = inst.op.rmatvec(&resid)?;
    let mut on_support = vec![false; inst.n()];
    let mut support_residual: f64 = 0.0;
    for (i, v) in inst.x_star.iter() {
        on_support[i] = true;
        support_residual = support_residual.max((r[i] + inst.tau * v.signum()).abs());
    }
    let off_support_excess = r
        .iter()
        .zip(&on_support)
        .filter(|(_, on)| !**on)
        .fold(0.0f64, |acc, (ri, _)| acc.max(ri.abs() - inst.tau));
    let threshold = tol * inst.tau;
    Ok(CertificateReport {
        support_residual,
        off_support_excess,
        threshold,
        passed: support_residual <= threshold && off_support_excess <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Spectrum;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn identity(n: usize) -> OperatorSpec {
        OperatorSpec::diagonal(n, Spectrum::explicit(vec![1.0; n]).unwrap()).unwrap()
    }

    #[test]
    fn subgradient_sign_cases() {
        let mut r = rng::seeded(0);
        let x = SparseSolution::from_dense(&[3.0, -2.0]);
        assert_eq!(subgradient_of(&x, ZeroFill::default(), &mut r).0, vec![1.0, -1.0]);
        let x = SparseSolution::from_dense(&[0.0, 5.0]);
        assert_eq!(subgradient_of(&x, ZeroFill::Constant(0.0), &mut r).0, vec![0.0, 1.0]);
        let x = SparseSolution::zeros(1000);
        let g = subgradient_of(&x, ZeroFill::default(), &mut r);
        assert!(g.0.iter().all(|v| v.abs() <= 0.9));
    }

    #[test]
    fn igen_identity_hand_example() {
        let x = SparseSolution::from_dense(&[1.0, 0.0]);
        let inst = igen(0.5, identity(2), x, ZeroFill::Constant(0.0), &mut rng::seeded(0)).unwrap();
        assert_eq!(inst.b, vec![1.5, 0.0]);
        assert_abs_diff_eq!(inst.noise_norm, 0.5, epsilon = 1e-15);
        let r = verify_optimality(&inst, 1e-12).unwrap();
        assert!(r.passed);
        assert_eq!(r.support_residual, 0.0);
    }

    #[test]
    fn igen_zero_solution_zero_fill_gives_zero_b() {
        let spec = OperatorSpec::diagonal(6, Spectrum::explicit(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        let inst = igen(
            1.0,
            spec,
            SparseSolution::zeros(3),
            ZeroFill::Constant(0.0),
            &mut rng::seeded(0),
        )
        .unwrap();
        assert!(inst.b.iter().all(|&v| v == 0.0));
        assert!(verify_optimality(&inst, 1e-8).unwrap().passed);
    }

    #[test]
    fn igen_rejects_block_operator() {
        let basis = identity(1);
        let block = BlockOperator::new(basis, DenseMatrix::from_col_major(1, 1, vec![1.0])).unwrap();
        let err = igen(
            1.0,
            block,
            SparseSolution::zeros(2),
            ZeroFill::default(),
            &mut rng::seeded(0),
        )
        .unwrap_err();
        assert!(matches!(err, InstanceError::WrongGenerator { m: 1, n: 2 }));
    }

    #[test]
    fn igen_rejects_bad_tau() {
        let err = igen(
            0.0,
            identity(2),
            SparseSolution::zeros(2),
            ZeroFill::default(),
            &mut rng::seeded(0),
        );
        assert!(matches!(err, Err(InstanceError::InvalidTau(_))));
    }

    #[test]
    fn igen2_scalar_hand_example() {
        let basis = OperatorSpec::diagonal(1, Spectrum::explicit(vec![2.0]).unwrap()).unwrap();
        let n = DenseMatrix::from_col_major(1, 1, vec![1.0]);
        let x = SparseSolution::from_dense(&[3.0, 0.0]);
        let inst = igen2(
            1.0,
            basis,
            n,
            x,
            ZeroFill::Constant(0.0),
            XiPolicy::Constant(0.5),
            &mut rng::seeded(0),
        )
        .unwrap();
        assert_abs_diff_eq!(inst.noise_norm, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(inst.b[0], 6.5, epsilon = 1e-14);
        let dense = inst.op.materialize_dense().unwrap();
        assert_abs_diff_eq!(dense.get(0, 0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dense.get(0, 1), 1.0, epsilon = 1e-15);
        // A^T (A x* - b) = (-1, -0.5)
        let resid: Vec<f64> = inst
            .op
            .matvec(&inst.x_star.to_dense())
            .unwrap()
            .iter()
            .zip(&inst.b)
            .map(|(a, b)| a - b)
            .collect();
        let r = inst.op.rmatvec(&resid).unwrap();
        assert_abs_diff_eq!(r[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[1], -0.5, epsilon = 1e-14);
        assert!(verify_optimality(&inst, 1e-12).unwrap().passed);
    }

    #[test]
    fn igen2_support_checks() {
        let basis = identity(2);
        let cols = DenseMatrix::from_col_major(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let x = SparseSolution::from_dense(&[0.0, 0.0, 1.0, 0.0]);
        let err = igen2(
            1.0,
            basis,
            cols,
            x,
            ZeroFill::default(),
            XiPolicy::Uniform,
            &mut rng::seeded(0),
        )
        .unwrap_err();
        assert!(matches!(err, InstanceError::InvalidSupport(_)));
    }

    #[test]
    fn igen2_orthogonal_column_is_resampled() {
        // e = tau B^{-T} g = (1, 0); the column (0, 1) is orthogonal to it
        let basis = identity(2);
        let cols = DenseMatrix::from_col_major(2, 1, vec![0.0, 1.0]);
        let x = SparseSolution::from_dense(&[1.0, 0.0, 0.0]);
        let inst = igen2(
            1.0,
            basis,
            cols,
            x,
            ZeroFill::Constant(0.0),
            XiPolicy::Constant(0.5),
            &mut rng::seeded(3),
        )
        .unwrap();
        let dense = inst.op.materialize_dense().unwrap();
        assert_abs_diff_eq!(dense.get(0, 2).abs(), 0.5, epsilon = 1e-14);
        assert!(verify_optimality(&inst, 1e-12).unwrap().passed);
    }

    #[test]
    fn perturbed_b_fails_certificate() {
        let x = SparseSolution::from_dense(&[1.0, 0.0, -2.0]);
        let spec = OperatorSpec::diagonal(4, Spectrum::explicit(vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        let mut inst = igen(1.0, spec, x, ZeroFill::default(), &mut rng::seeded(5)).unwrap();
        assert!(verify_optimality(&inst, 1e-8).unwrap().passed);
        inst.b[0] += 1.0;
        assert!(!verify_optimality(&inst, 1e-8).unwrap().passed);
    }

    #[test]
    fn trivial_zero_problem_passes() {
        let inst = ProblemInstance::new(1.0, identity(3).into(), vec![0.0; 3], SparseSolution::zeros(3)).unwrap();
        assert!(verify_optimality(&inst, 1e-8).unwrap().passed);
    }
}
