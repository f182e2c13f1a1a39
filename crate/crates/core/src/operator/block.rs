use super::dense::DenseMatrix;
use super::{OperatorError, OperatorSpec};

/// `A = [B, N~]` for the wide case `m < n`: an invertible square factored
/// block `B` followed by explicitly stored extension columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    basis: OperatorSpec,
    extension: DenseMatrix,
}

impl BlockOperator {
    pub fn new(basis: OperatorSpec, extension: DenseMatrix) -> Result<Self, OperatorError> {
        if basis.m() != basis.n() {
            return Err(OperatorError::InvalidArgument(format!(
                "block basis must be square, got {} x {}",
                basis.m(),
                basis.n()
            )));
        }
        if extension.rows() != basis.m() {
            return Err(OperatorError::DimensionMismatch {
                expected: basis.m(),
                found: extension.rows(),
            });
        }
        Ok(BlockOperator { basis, extension })
    }

    pub fn basis(&self) -> &OperatorSpec {
        &self.basis
    }

    pub fn extension(&self) -> &DenseMatrix {
        &self.extension
    }

    pub fn m(&self) -> usize {
        self.basis.m()
    }

    pub fn n(&self) -> usize {
        self.basis.n() + self.extension.cols()
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        if x.len() != self.n() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.n(),
                found: x.len(),
            });
        }
        let m = self.m();
        self.basis.matvec_into(&x[..m], out)?;
        for (c, &xc) in x[m..].iter().enumerate() {
            if xc != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.extension.column(c)) {
                    *o += a * xc;
                }
            }
        }
        Ok(())
    }

    pub fn rmatvec_into(&self, y: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        if out.len() != self.n() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.n(),
                found: out.len(),
            });
        }
        let m = self.m();
        let (head, tail) = out.split_at_mut(m);
        self.basis.rmatvec_into(y, head)?;
        for (c, t) in tail.iter_mut().enumerate() {
            *t = self.extension.column(c).iter().zip(y).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    pub fn diag_ata(&self) -> Vec<f64> {
        let mut d = self.basis.diag_ata();
        d.extend((0..self.extension.cols()).map(|c| self.extension.column(c).iter().map(|a| a * a).sum::<f64>()));
        d
    }

    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = self.basis.columns();
        cols.extend((0..self.extension.cols()).map(|c| {
            self.extension
                .column(c)
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, a)| *a != 0.0)
                .collect()
        }));
        cols
    }

    /// Upper bound on `lambda_max(A^T A) = ||B B^T + N~ N~^T||`.
    pub fn lipschitz_upper(&self) -> f64 {
        let b = self.basis.spectrum().max();
        let frob: f64 = self.extension.as_col_major().iter().map(|a| a * a).sum();
        b * b + frob
    }
}
