use std::cell::RefCell;

use super::dense::{DenseMatrix, DEFAULT_DENSE_CAP};
use super::stage::{PairOffset, RotationStage};
use super::{OperatorError, Permutation, Spectrum};

/// Implicit factored matrix `A = (P1 G~ P2) Sigma G^T` of size `m x n`,
/// `m >= n`.
///
/// `G = right_stages[0] * right_stages[1] * ...` acts on `R^n` and
/// `G~ = left_stages[0] * left_stages[1] * ...` acts on `R^m`. `Sigma` is the
/// `m x n` matrix with the spectrum on its diagonal. Nothing of size
/// `nnz(A)` is ever stored.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    m: usize,
    n: usize,
    right_stages: Vec<RotationStage>,
    left_stages: Vec<RotationStage>,
    p1: Permutation,
    p2: Permutation,
    spectrum: Spectrum,
}

impl OperatorSpec {
    pub fn new(
        m: usize,
        right_stages: Vec<RotationStage>,
        left_stages: Vec<RotationStage>,
        p1: Permutation,
        p2: Permutation,
        spectrum: Spectrum,
    ) -> Result<Self, OperatorError> {
        let n = spectrum.len();
        if n == 0 {
            return Err(OperatorError::InvalidArgument("operator needs n >= 1".into()));
        }
        if m < n {
            return Err(OperatorError::InvalidArgument(format!(
                "factored operator needs m >= n, got m = {m}, n = {n}"
            )));
        }
        if let Some(s) = right_stages.iter().find(|s| s.n() != n) {
            return Err(OperatorError::DimensionMismatch {
                expected: n,
                found: s.n(),
            });
        }
        if let Some(s) = left_stages.iter().find(|s| s.n() != m) {
            return Err(OperatorError::DimensionMismatch {
                expected: m,
                found: s.n(),
            });
        }
        for p in [&p1, &p2] {
            if p.n() != m {
                return Err(OperatorError::DimensionMismatch {
                    expected: m,
                    found: p.n(),
                });
            }
        }
        Ok(OperatorSpec {
            m,
            n,
            right_stages,
            left_stages,
            p1,
            p2,
            spectrum,
        })
    }

    /// `A = Sigma` padded with zero rows: no rotations, identity permutations.
    pub fn diagonal(m: usize, spectrum: Spectrum) -> Result<Self, OperatorError> {
        Self::new(
            m,
            Vec::new(),
            Vec::new(),
            Permutation::identity(m),
            Permutation::identity(m),
            spectrum,
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn right_stages(&self) -> &[RotationStage] {
        &self.right_stages
    }

    pub fn left_stages(&self) -> &[RotationStage] {
        &self.left_stages
    }

    pub fn p1(&self) -> &Permutation {
        &self.p1
    }

    pub fn p2(&self) -> &Permutation {
        &self.p2
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Bytes describing the operator's structure, excluding realized
    /// vectors (singular values and permutation arrays).
    pub fn structural_bytes(&self) -> usize {
        let stages: usize = self
            .right_stages
            .iter()
            .chain(&self.left_stages)
            .map(RotationStage::descriptor_bytes)
            .sum();
        2 * std::mem::size_of::<usize>() + stages + 2 * std::mem::size_of::<Option<u64>>()
    }

    /// `out = A x`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        check_len(self.n, x.len())?;
        check_len(self.m, out.len())?;
        let n = self.n;
        let sigma = self.spectrum.values();
        if self.p2.is_identity() {
            let (head, tail) = out.split_at_mut(n);
            match self.right_stages.split_last() {
                None => {
                    for ((o, xi), s) in head.iter_mut().zip(x).zip(sigma) {
                        *o = s * xi;
                    }
                }
                Some((only, [])) => only.apply_into_scaled(x, head, true, Some(sigma)),
                Some((last, rest)) => {
                    rest[0].apply_into_scaled(x, head, true, None);
                    for stage in rest[1..].iter().chain([last]) {
                        stage.apply_unchecked(head, true);
                    }
                    for (o, s) in head.iter_mut().zip(sigma) {
                        *o *= s;
                    }
                }
            }
            tail.fill(0.0);
        } else {
            with_scratch(n, |y| {
                y.copy_from_slice(x);
                for stage in &self.right_stages {
                    stage.apply_unchecked(y, true);
                }
                for (i, o) in out.iter_mut().enumerate() {
                    let src = self.p2.source(i);
                    *o = if src < n { sigma[src] * y[src] } else { 0.0 };
                }
            });
        }
        for stage in self.left_stages.iter().rev() {
            stage.apply_unchecked(out, false);
        }
        if !self.p1.is_identity() {
            with_scratch(self.m, |z| {
                z.copy_from_slice(out);
                self.p1.apply_into(z, out)
            })?;
        }
        Ok(())
    }

    /// `out = A^T y`.
    pub fn rmatvec_into(&self, y: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        check_len(self.m, y.len())?;
        check_len(self.n, out.len())?;
        let n = self.n;
        let sigma = self.spectrum.values();
        with_scratch(self.m, |z| {
            self.p1.apply_transpose_into(y, z)?;
            for stage in &self.left_stages {
                stage.apply_unchecked(z, true);
            }
            if self.p2.is_identity() {
                for ((o, s), zi) in out.iter_mut().zip(sigma).zip(z.iter()) {
                    *o = s * zi;
                }
            } else {
                for (i, &zi) in z.iter().enumerate() {
                    let k = self.p2.source(i);
                    if k < n {
                        out[k] = sigma[k] * zi;
                    }
                }
            }
            Ok::<_, OperatorError>(())
        })?;
        for stage in self.right_stages.iter().rev() {
            stage.apply_unchecked(out, false);
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; self.m];
        self.matvec_into(x, &mut out)?;
        Ok(out)
    }

    pub fn rmatvec(&self, y: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; self.n];
        self.rmatvec_into(y, &mut out)?;
        Ok(out)
    }

    /// `G v` on `R^n`.
    pub fn apply_g(&self, v: &[f64]) -> Result<Vec<f64>, OperatorError> {
        check_len(self.n, v.len())?;
        let mut out = v.to_vec();
        for stage in self.right_stages.iter().rev() {
            stage.apply_unchecked(&mut out, false);
        }
        Ok(out)
    }

    /// `G^T v` on `R^n`.
    pub fn apply_gt(&self, v: &[f64]) -> Result<Vec<f64>, OperatorError> {
        check_len(self.n, v.len())?;
        let mut out = v.to_vec();
        for stage in &self.right_stages {
            stage.apply_unchecked(&mut out, true);
        }
        Ok(out)
    }

    /// `G diag(weights) G^T v`, the building block for functions of `A^T A`.
    pub fn apply_right_spectral(
        &self,
        v: &[f64],
        weights: impl Fn(usize, f64) -> f64,
    ) -> Result<Vec<f64>, OperatorError> {
        let mut w = self.apply_gt(v)?;
        for (i, (wi, &s)) in w.iter_mut().zip(self.spectrum.values()).enumerate() {
            *wi *= weights(i, s);
        }
        self.apply_g(&w)
    }

    /// `(A^T A)^{-1} v = G (Sigma^T Sigma)^{-1} G^T v`.
    pub fn apply_ata_inverse(&self, v: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if let Some(index) = self.spectrum.values().iter().position(|&s| s == 0.0) {
            return Err(OperatorError::SingularSpectrum { index });
        }
        self.apply_right_spectral(v, |_, s| 1.0 / (s * s))
    }

    /// Exact diagonal of `A^T A = G Sigma^T Sigma G^T`: entry `i` is
    /// `sum_j sigma_j^2 G_ij^2`, computed from the sparse rows of `G`.
    pub fn diag_ata(&self) -> Vec<f64> {
        let sigma = self.spectrum.values();
        (0..self.n)
            .map(|i| {
                self.g_row(i)
                    .into_iter()
                    .map(|(j, g)| sigma[j] * sigma[j] * g * g)
                    .sum()
            })
            .collect()
    }

    /// Row `i` of `G`, i.e. `G^T e_i`, as sorted sparse entries.
    pub(crate) fn g_row(&self, i: usize) -> Vec<(usize, f64)> {
        propagate(vec![(i, 1.0)], self.n, self.right_stages.iter(), true)
    }

    /// Column `j` of `A` as sorted sparse entries.
    pub fn column(&self, j: usize) -> Vec<(usize, f64)> {
        let sigma = self.spectrum.values();
        let scaled: Vec<(usize, f64)> = self.g_row(j).into_iter().map(|(k, v)| (k, sigma[k] * v)).collect();
        self.left_columns(scaled)
    }

    pub(crate) fn left_columns(&self, scaled: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
        let inv2 = (!self.p2.is_identity()).then(|| self.p2.inverse_mapping());
        let inv1 = (!self.p1.is_identity()).then(|| self.p1.inverse_mapping());
        self.left_columns_with(scaled, inv2.as_deref(), inv1.as_deref())
    }

    fn left_columns_with(
        &self,
        scaled: Vec<(usize, f64)>,
        inv2: Option<&[usize]>,
        inv1: Option<&[usize]>,
    ) -> Vec<(usize, f64)> {
        let mut v = permute_sparse(scaled, inv2);
        v = propagate(v, self.m, self.left_stages.iter().rev(), false);
        permute_sparse(v, inv1)
    }

    /// All columns of `A` as sparse entries, sharing one pass of
    /// permutation inverses.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let sigma = self.spectrum.values();
        let inv2 = (!self.p2.is_identity()).then(|| self.p2.inverse_mapping());
        let inv1 = (!self.p1.is_identity()).then(|| self.p1.inverse_mapping());
        (0..self.n)
            .map(|j| {
                let scaled = self.g_row(j).into_iter().map(|(k, v)| (k, sigma[k] * v)).collect();
                self.left_columns_with(scaled, inv2.as_deref(), inv1.as_deref())
            })
            .collect()
    }

    /// Explicit `A`, built column by column from `matvec` on basis vectors.
    pub fn materialize_dense(&self) -> Result<DenseMatrix, OperatorError> {
        self.materialize_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn materialize_dense_capped(&self, cap: usize) -> Result<DenseMatrix, OperatorError> {
        let entries = self.m.saturating_mul(self.n);
        if entries > cap {
            return Err(OperatorError::MaterializationCap { entries, cap });
        }
        let mut data = Vec::with_capacity(entries);
        let mut e = vec![0.0; self.n];
        let mut col = vec![0.0; self.m];
        for j in 0..self.n {
            e[j] = 1.0;
            self.matvec_into(&e, &mut col)?;
            e[j] = 0.0;
            data.extend_from_slice(&col);
        }
        Ok(DenseMatrix::from_col_major(self.m, self.n, data))
    }

    /// Entries of dense `A` and `A^T A` whose magnitude exceeds `tol`.
    pub fn nnz_counts(&self, tol: f64) -> Result<(usize, usize), OperatorError> {
        let a = self.materialize_dense()?;
        let gram = a.gram();
        Ok((a.count_nonzeros(tol), gram.count_nonzeros(tol)))
    }
}

/// Stage list realizing the alternating compositions `G`, `G2 G`, `G G2 G`,
/// `G2 G G2 G`, ... with `G` pairing from offset 0 and `G2` from offset 1.
/// The rightmost factor is always `G`.
pub fn alternating_stages(n: usize, theta: f64, count: usize) -> Result<Vec<RotationStage>, OperatorError> {
    (0..count)
        .map(|t| {
            let offset = if (count - 1 - t).is_multiple_of(2) {
                PairOffset::Even
            } else {
                PairOffset::Odd
            };
            RotationStage::uniform(n, offset, theta)
        })
        .collect()
}

thread_local! {
    static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

// Per-thread buffer reused across products; contents on entry are arbitrary.
fn with_scratch<T>(len: usize, f: impl FnOnce(&mut [f64]) -> T) -> T {
    SCRATCH.with(|cell| match cell.try_borrow_mut() {
        Ok(mut buf) => {
            buf.resize(len, 0.0);
            f(&mut buf[..len])
        }
        Err(_) => f(&mut vec![0.0; len]),
    })
}

fn check_len(expected: usize, found: usize) -> Result<(), OperatorError> {
    if expected != found {
        return Err(OperatorError::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn permute_sparse(mut v: Vec<(usize, f64)>, inverse: Option<&[usize]>) -> Vec<(usize, f64)> {
    if let Some(inv) = inverse {
        for e in &mut v {
            e.0 = inv[e.0];
        }
        v.sort_unstable_by_key(|e| e.0);
    }
    v
}

/// Pushes a sparse vector through a sequence of stages, switching to a
/// dense sweep once fill exceeds a quarter of the dimension.
fn propagate<'a>(
    mut v: Vec<(usize, f64)>,
    dim: usize,
    stages: impl Iterator<Item = &'a RotationStage>,
    transposed: bool,
) -> Vec<(usize, f64)> {
    let mut dense: Option<Vec<f64>> = None;
    for stage in stages {
        if let Some(d) = dense.as_mut() {
            stage.apply_unchecked(d, transposed);
            continue;
        }
        v = stage.apply_sparse(&v, transposed);
        if v.len() * 4 > dim {
            let mut d = vec![0.0; dim];
            for &(i, x) in &v {
                d[i] = x;
            }
            dense = Some(d);
        }
    }
    match dense {
        Some(d) => d.into_iter().enumerate().filter(|(_, x)| *x != 0.0).collect(),
        None => v,
    }
}
