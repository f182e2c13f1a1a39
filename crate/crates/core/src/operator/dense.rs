/// Default cap on entries for dense materialization (2^24).
pub const DEFAULT_DENSE_CAP: usize = 1 << 24;

/// Small column-major dense matrix, used as a test oracle and for
/// sparsity counting.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "dense data length");
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (c, &xc) in x.iter().enumerate() {
            if xc != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.column(c)) {
                    *o += a * xc;
                }
            }
        }
        out
    }

    pub fn transpose_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|c| self.column(c).iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `M^T M`.
    pub fn gram(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let v: f64 = self.column(i).iter().zip(self.column(j)).map(|(a, b)| a * b).sum();
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    pub fn count_nonzeros(&self, tol: f64) -> usize {
        self.data.iter().filter(|v| v.abs() > tol).count()
    }
}
