use rand::seq::SliceRandom;

use super::OperatorError;
use crate::rng;

/// Permutation matrix on `R^n`, acting as `(P v)_i = v[mapping[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Permutation {
    n: usize,
    mapping: Option<Vec<usize>>,
    seed: Option<u64>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            n,
            mapping: None,
            seed: None,
        }
    }

    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self, OperatorError> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(OperatorError::InvalidArgument(format!(
                    "permutation mapping is not a bijection on 0..{n}"
                )));
            }
            seen[m] = true;
        }
        Ok(Permutation {
            n,
            mapping: Some(mapping),
            seed: None,
        })
    }

    /// Uniformly random permutation, regenerated deterministically from
    /// `seed` by Fisher-Yates.
    pub fn seeded(n: usize, seed: u64) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(&mut rng::seeded(seed));
        Permutation {
            n,
            mapping: Some(mapping),
            seed: Some(seed),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        match &self.mapping {
            None => true,
            Some(m) => m.iter().enumerate().all(|(i, &p)| i == p),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn mapping(&self) -> Option<&[usize]> {
        self.mapping.as_deref()
    }

    /// Index `v` is read from when producing entry `i` of `P v`.
    #[inline]
    pub fn source(&self, i: usize) -> usize {
        match &self.mapping {
            None => i,
            Some(m) => m[i],
        }
    }

    /// Inverse mapping: position that entry `k` of `v` lands at in `P v`.
    pub fn inverse_mapping(&self) -> Vec<usize> {
        let mut inv: Vec<usize> = (0..self.n).collect();
        if let Some(m) = &self.mapping {
            for (i, &src) in m.iter().enumerate() {
                inv[src] = i;
            }
        }
        inv
    }

    /// `out = P v`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        self.check(v.len())?;
        self.check(out.len())?;
        match &self.mapping {
            None => out.copy_from_slice(v),
            Some(m) => {
                for (o, &src) in out.iter_mut().zip(m) {
                    *o = v[src];
                }
            }
        }
        Ok(())
    }

    /// `out = P^T v`.
    pub fn apply_transpose_into(&self, v: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        self.check(v.len())?;
        self.check(out.len())?;
        match &self.mapping {
            None => out.copy_from_slice(v),
            Some(m) => {
                for (&x, &src) in v.iter().zip(m) {
                    out[src] = x;
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; v.len()];
        self.apply_transpose_into(v, &mut out)?;
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<(), OperatorError> {
        if len != self.n {
            return Err(OperatorError::DimensionMismatch {
                expected: self.n,
                found: len,
            });
        }
        Ok(())
    }
}
