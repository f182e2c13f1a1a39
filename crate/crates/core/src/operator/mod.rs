//! Matrix-free operators built from Givens-rotation stages, permutations
//! and a diagonal spectrum.
//!
//! [`OperatorSpec`] encodes `A = (P1 G~ P2) Sigma G^T` for `m >= n`. Its
//! singular value decomposition is known by construction, so
//! `(A^T A)^{-1}` costs two stage sweeps and a diagonal scaling.
//! [`BlockOperator`] covers the wide case `A = [B, N~]`. [`Operator`] is the
//! common front the generators and solvers work against.

mod block;
mod dense;
mod permutation;
mod spec;
mod spectrum;
mod stage;

pub use block::BlockOperator;
pub use dense::{DenseMatrix, DEFAULT_DENSE_CAP};
pub use permutation::Permutation;
pub use spec::{alternating_stages, OperatorSpec};
pub use spectrum::{Spectrum, SpectrumKind};
pub use stage::{PairOffset, Rotation, RotationStage};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular spectrum: sigma_{index} is zero")]
    SingularSpectrum { index: usize },
    #[error("refusing to materialize {entries} entries (cap {cap})")]
    MaterializationCap { entries: usize, cap: usize },
}

/// Either factored form the generators produce.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Factored(OperatorSpec),
    Block(BlockOperator),
}

impl From<OperatorSpec> for Operator {
    fn from(spec: OperatorSpec) -> Self {
        Operator::Factored(spec)
    }
}

impl From<BlockOperator> for Operator {
    fn from(block: BlockOperator) -> Self {
        Operator::Block(block)
    }
}

impl Operator {
    pub fn nrows(&self) -> usize {
        match self {
            Operator::Factored(s) => s.m(),
            Operator::Block(b) => b.m(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Operator::Factored(s) => s.n(),
            Operator::Block(b) => b.n(),
        }
    }

    pub fn as_factored(&self) -> Option<&OperatorSpec> {
        match self {
            Operator::Factored(s) => Some(s),
            Operator::Block(_) => None,
        }
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        match self {
            Operator::Factored(s) => s.matvec_into(x, out),
            Operator::Block(b) => b.matvec_into(x, out),
        }
    }

    pub fn rmatvec_into(&self, y: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        match self {
            Operator::Factored(s) => s.rmatvec_into(y, out),
            Operator::Block(b) => b.rmatvec_into(y, out),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; self.nrows()];
        self.matvec_into(x, &mut out)?;
        Ok(out)
    }

    pub fn rmatvec(&self, y: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; self.ncols()];
        self.rmatvec_into(y, &mut out)?;
        Ok(out)
    }

    /// Diagonal of `A^T A`.
    pub fn diag_ata(&self) -> Vec<f64> {
        match self {
            Operator::Factored(s) => s.diag_ata(),
            Operator::Block(b) => b.diag_ata(),
        }
    }

    /// Upper bound on `lambda_max(A^T A)`; exact for the factored form.
    pub fn lipschitz_upper(&self) -> f64 {
        match self {
            Operator::Factored(s) => {
                let m = s.spectrum().max();
                m * m
            }
            Operator::Block(b) => b.lipschitz_upper(),
        }
    }

    /// Columns of `A` in compressed sparse column form.
    pub fn to_csc(&self) -> CscMatrix {
        let cols = match self {
            Operator::Factored(s) => s.columns(),
            Operator::Block(b) => b.columns(),
        };
        CscMatrix::from_columns(self.nrows(), cols)
    }

    pub fn materialize_dense(&self) -> Result<DenseMatrix, OperatorError> {
        let (m, n) = (self.nrows(), self.ncols());
        let entries = m.saturating_mul(n);
        if entries > DEFAULT_DENSE_CAP {
            return Err(OperatorError::MaterializationCap {
                entries,
                cap: DEFAULT_DENSE_CAP,
            });
        }
        let mut data = Vec::with_capacity(entries);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.matvec_into(&e, &mut col)?;
            e[j] = 0.0;
            data.extend_from_slice(&col);
        }
        Ok(DenseMatrix::from_col_major(m, n, data))
    }
}

/// Compressed sparse column matrix, used for coordinate access to `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn from_columns(nrows: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for col in columns {
            for (r, v) in col {
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix {
            nrows,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    /// `A_j^T y`.
    #[inline]
    pub fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        let (rows, vals) = self.column(j);
        rows.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum()
    }

    /// `y += alpha A_j`.
    #[inline]
    pub fn column_axpy(&self, j: usize, alpha: f64, y: &mut [f64]) {
        let (rows, vals) = self.column(j);
        for (&r, &v) in rows.iter().zip(vals) {
            y[r] += alpha * v;
        }
    }

    /// Largest number of nonzeros in any row, the degree of partial
    /// separability of `||Ax - b||^2`.
    pub fn max_row_nnz(&self) -> usize {
        let mut counts = vec![0usize; self.nrows];
        for &r in &self.row_idx {
            counts[r] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }
}
