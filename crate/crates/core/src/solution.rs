//! Planted sparse solutions and the two conditioning measures of a
//! problem: `kappa(A^T A)` and `kappa_rho(x*)`.

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::operator::{OperatorError, OperatorSpec, RotationStage, Spectrum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolutionError {
    #[error("support size {s} exceeds dimension {n}")]
    SupportTooLarge { s: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("conditioning of the zero vector is undefined")]
    ZeroSolution,
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Sparse vector in `R^n` with sorted support and nonzero values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    n: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSolution {
    pub fn zeros(n: usize) -> Self {
        SparseSolution {
            n,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(index, value)` pairs; zero values are dropped.
    pub fn from_pairs(n: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self, SolutionError> {
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(SolutionError::InvalidParameter("duplicate support index".into()));
        }
        if let Some(&(i, _)) = pairs.iter().find(|p| p.0 >= n) {
            return Err(SolutionError::InvalidParameter(format!(
                "support index {i} out of range for n = {n}"
            )));
        }
        if let Some(&(i, v)) = pairs.iter().find(|p| !p.1.is_finite()) {
            return Err(SolutionError::InvalidParameter(format!("x[{i}] = {v} is not finite")));
        }
        pairs.retain(|p| p.1 != 0.0);
        let (indices, values) = pairs.into_iter().unzip();
        Ok(SparseSolution { n, indices, values })
    }

    pub fn from_dense(x: &[f64]) -> Self {
        let pairs = x.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
        Self::from_pairs(x.len(), pairs).expect("dense input is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nonzeros `s = |S|`.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, v) in self.iter() {
            x[i] = v;
        }
        x
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Random support of size `s`, values uniform in `[-gamma, gamma]` with
/// exact zeros redrawn.
pub fn osgen<R: Rng + ?Sized>(n: usize, s: usize, gamma: f64, rng: &mut R) -> Result<SparseSolution, SolutionError> {
    if s > n {
        return Err(SolutionError::SupportTooLarge { s, n });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(SolutionError::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let mut support = index::sample(rng, n, s).into_vec();
    support.sort_unstable();
    let pairs = support
        .into_iter()
        .map(|i| {
            let v = loop {
                let v = rng.random_range(-gamma..=gamma);
                if v != 0.0 {
                    break v;
                }
            };
            (i, v)
        })
        .collect();
    SparseSolution::from_pairs(n, pairs)
}

/// Random support of size `s` where the first half of the support (in
/// draw order) takes `first` and the rest takes `second`.
pub fn two_value<R: Rng + ?Sized>(
    n: usize,
    s: usize,
    first: f64,
    second: f64,
    rng: &mut R,
) -> Result<SparseSolution, SolutionError> {
    if s > n {
        return Err(SolutionError::SupportTooLarge { s, n });
    }
    if first == 0.0 || second == 0.0 {
        return Err(SolutionError::InvalidParameter("planted values must be nonzero".into()));
    }
    let support = index::sample(rng, n, s).into_vec();
    let half = s / 2;
    let pairs = support
        .into_iter()
        .enumerate()
        .map(|(k, i)| (i, if k < half { first } else { second }))
        .collect();
    SparseSolution::from_pairs(n, pairs)
}

/// Solution whose mass leans on the small-eigenvalue directions of
/// `A^T A`.
///
/// Computes `x^ = G * gamma (Sigma^T Sigma)^{-1} 1`, the exact minimizer of
/// `||G^T x - gamma (Sigma^T Sigma)^{-1} 1||`, then keeps the `s1` smallest
/// and `s2` largest nonzero components by magnitude. Ties are broken by
/// index.
pub fn osgen3(
    spectrum: &Spectrum,
    right_stages: &[RotationStage],
    s1: usize,
    s2: usize,
    gamma: f64,
) -> Result<SparseSolution, SolutionError> {
    let n = spectrum.len();
    let s = s1 + s2;
    if s > n {
        return Err(SolutionError::SupportTooLarge { s, n });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(SolutionError::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if let Some(st) = right_stages.iter().find(|st| st.n() != n) {
        return Err(OperatorError::DimensionMismatch {
            expected: n,
            found: st.n(),
        }
        .into());
    }
    let mut xhat: Vec<f64> = spectrum.values().iter().map(|s| gamma / (s * s)).collect();
    for stage in right_stages.iter().rev() {
        stage.apply_in_place(&mut xhat, false)?;
    }

    let mut order: Vec<usize> = (0..n).filter(|&i| xhat[i] != 0.0).collect();
    if order.len() <= s {
        return Ok(SparseSolution::from_dense(&xhat));
    }
    order.sort_by(|&a, &b| xhat[a].abs().total_cmp(&xhat[b].abs()).then(a.cmp(&b)));
    let mut keep = vec![false; n];
    for &i in &order[..s1] {
        keep[i] = true;
    }
    let mut by_largest = order.clone();
    by_largest.sort_by(|&a, &b| xhat[b].abs().total_cmp(&xhat[a].abs()).then(a.cmp(&b)));
    for &i in &by_largest[..s2] {
        keep[i] = true;
    }
    let pairs = (0..n).filter(|&i| keep[i]).map(|i| (i, xhat[i])).collect();
    SparseSolution::from_pairs(n, pairs)
}

/// `kappa(A^T A) = lambda_1 / lambda_n = (sigma_max / sigma_min)^2`.
pub fn kappa_ata(spectrum: &Spectrum) -> f64 {
    spectrum.kappa_ata()
}

/// `P_rho v = G mask G^T v`, the projection onto eigenvectors of `A^T A`
/// with eigenvalue at least `rho`.
pub fn project_rho(op: &OperatorSpec, rho: f64, v: &[f64]) -> Result<Vec<f64>, SolutionError> {
    Ok(op.apply_right_spectral(v, |_, s| if s * s >= rho { 1.0 } else { 0.0 })?)
}

/// `||x*|| / ||P_rho x*||`, or `+inf` when the projection vanishes (to a
/// relative `1e-14`).
pub fn kappa_rho(x_star: &SparseSolution, op: &OperatorSpec, rho: f64) -> Result<f64, SolutionError> {
    if !(rho > 0.0) {
        return Err(SolutionError::InvalidParameter(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if x_star.n() != op.n() {
        return Err(OperatorError::DimensionMismatch {
            expected: op.n(),
            found: x_star.n(),
        }
        .into());
    }
    let norm = x_star.norm2();
    if norm == 0.0 {
        return Err(SolutionError::ZeroSolution);
    }
    let p = project_rho(op, rho, &x_star.to_dense())?;
    let pnorm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if pnorm <= 1e-14 * norm {
        return Ok(f64::INFINITY);
    }
    Ok(norm / pnorm)
}

/// Default threshold for `kappa_rho`.
pub const DEFAULT_RHO: f64 = 0.1;

/// Both conditioning measures of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditioningReport {
    pub kappa_ata: f64,
    pub rho: f64,
    pub kappa_rho: f64,
}

impl ConditioningReport {
    pub fn compute(op: &OperatorSpec, x_star: &SparseSolution, rho: f64) -> Result<Self, SolutionError> {
        let kappa_rho = match kappa_rho(x_star, op, rho) {
            Err(SolutionError::ZeroSolution) => 1.0,
            other => other?,
        };
        Ok(ConditioningReport {
            kappa_ata: kappa_ata(op.spectrum()),
            rho,
            kappa_rho,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{alternating_stages, PairOffset};
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn diag12() -> OperatorSpec {
        OperatorSpec::diagonal(2, Spectrum::explicit(vec![1.0, 2.0]).unwrap()).unwrap()
    }

    #[test]
    fn osgen_empty_and_full() {
        let mut r = rng::seeded(1);
        assert_eq!(osgen(10, 0, 1.0, &mut r).unwrap().nnz(), 0);
        let x = osgen(10, 10, 1.0, &mut r).unwrap();
        assert_eq!(x.nnz(), 10);
        assert!(x.values().iter().all(|v| v.abs() <= 1.0 && *v != 0.0));
        assert!(matches!(
            osgen(3, 4, 1.0, &mut r),
            Err(SolutionError::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn osgen_large_support_bound() {
        let n = 1 << 20;
        let x = osgen(n, n >> 7, 10.0, &mut rng::seeded(2)).unwrap();
        assert_eq!(x.nnz(), 1 << 13);
        assert!(x.norm_inf() <= 10.0);
    }

    #[test]
    fn osgen3_keeps_smallest() {
        let s = Spectrum::explicit(vec![1.0, 2.0]).unwrap();
        let x = osgen3(&s, &[], 1, 0, 1.0).unwrap();
        assert_eq!(x.to_dense(), vec![0.0, 0.25]);
        let x = osgen3(&s, &[], 0, 1, 1.0).unwrap();
        assert_eq!(x.to_dense(), vec![1.0, 0.0]);
    }

    #[test]
    fn osgen3_full_support_is_unprojected() {
        let n = 16;
        let s = Spectrum::uniform(n, 0.0, 10.0, 0.1, 4).unwrap();
        let stages = alternating_stages(n, 0.3, 2).unwrap();
        let x = osgen3(&s, &stages, 8, 8, 100.0).unwrap();
        let mut xhat: Vec<f64> = s.values().iter().map(|v| 100.0 / (v * v)).collect();
        for st in stages.iter().rev() {
            st.apply_in_place(&mut xhat, false).unwrap();
        }
        for (a, b) in x.to_dense().iter().zip(&xhat) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn osgen3_support_size() {
        let n = 64;
        let s = Spectrum::uniform(n, 0.0, 10.0, 0.1, 8).unwrap();
        let stages = vec![RotationStage::uniform(n, PairOffset::Even, 0.6).unwrap()];
        let x = osgen3(&s, &stages, 3, 5, 100.0).unwrap();
        assert_eq!(x.nnz(), 8);
    }

    #[test]
    fn kappa_rho_examples() {
        let op = diag12();
        let x = SparseSolution::from_dense(&[0.0, 1.0]);
        assert_eq!(kappa_rho(&x, &op, 2.0).unwrap(), 1.0);
        let x = SparseSolution::from_dense(&[1.0, 0.0]);
        assert_eq!(kappa_rho(&x, &op, 2.0).unwrap(), f64::INFINITY);
        let x = SparseSolution::from_dense(&[1.0, 1.0]);
        assert_abs_diff_eq!(kappa_rho(&x, &op, 2.0).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        assert!(matches!(
            kappa_rho(&SparseSolution::zeros(2), &op, 2.0),
            Err(SolutionError::ZeroSolution)
        ));
    }

    #[test]
    fn kappa_ata_examples() {
        assert_eq!(kappa_ata(&Spectrum::explicit(vec![1.0; 5]).unwrap()), 1.0);
        assert_abs_diff_eq!(
            kappa_ata(&Spectrum::explicit(vec![0.1, 10.1]).unwrap()),
            10201.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn from_pairs_validation() {
        assert!(SparseSolution::from_pairs(3, vec![(0, 1.0), (0, 2.0)]).is_err());
        assert!(SparseSolution::from_pairs(3, vec![(3, 1.0)]).is_err());
        let x = SparseSolution::from_pairs(3, vec![(2, 1.0), (0, 0.0)]).unwrap();
        assert_eq!(x.support(), &[2]);
    }
}
