use rand::Rng;

use super::OperatorError;
use crate::rng;

/// How the singular values were produced.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    Explicit,
    /// Uniform draw on `(lo, hi]`, then shifted by `shift`.
    Uniform {
        lo: f64,
        hi: f64,
        shift: f64,
        seed: u64,
    },
    /// `odd` at 1-based odd positions, `even` at even positions.
    Alternating {
        odd: f64,
        even: f64,
    },
}

/// Singular values `sigma_1..sigma_n` of the generated matrix. All
/// entries are strictly positive, so `A^T A` has eigenvalues `sigma_i^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    kind: SpectrumKind,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn explicit(values: Vec<f64>) -> Result<Self, OperatorError> {
        validate(&values)?;
        Ok(Spectrum {
            kind: SpectrumKind::Explicit,
            values,
        })
    }

    /// Values drawn uniformly from `(lo, hi]` and shifted, giving
    /// `sigma_i` in `(lo + shift, hi + shift]`.
    pub fn uniform(n: usize, lo: f64, hi: f64, shift: f64, seed: u64) -> Result<Self, OperatorError> {
        if !(lo.is_finite() && hi.is_finite() && shift.is_finite()) || hi < lo {
            return Err(OperatorError::InvalidArgument(format!(
                "uniform spectrum needs finite lo <= hi, got [{lo}, {hi}]"
            )));
        }
        let mut rng = rng::seeded(seed);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                hi - (hi - lo) * u + shift
            })
            .collect();
        validate(&values)?;
        Ok(Spectrum {
            kind: SpectrumKind::Uniform { lo, hi, shift, seed },
            values,
        })
    }

    /// The uniform spectrum family `[0, 10^q]` shifted by `shift`.
    pub fn uniform_decades(n: usize, q: i32, shift: f64, seed: u64) -> Result<Self, OperatorError> {
        Self::uniform(n, 0.0, 10f64.powi(q), shift, seed)
    }

    pub fn alternating(n: usize, odd: f64, even: f64) -> Result<Self, OperatorError> {
        let values: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { odd } else { even }).collect();
        validate(&values)?;
        Ok(Spectrum {
            kind: SpectrumKind::Alternating { odd, even },
            values,
        })
    }

    /// Rebuilds a spectrum from recorded values, keeping the kind tag.
    pub fn with_recorded_values(kind: SpectrumKind, values: Vec<f64>) -> Result<Self, OperatorError> {
        validate(&values)?;
        Ok(Spectrum { kind, values })
    }

    pub fn kind(&self) -> &SpectrumKind {
        &self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Condition number of `A^T A`, `(max sigma / min sigma)^2`.
    pub fn kappa_ata(&self) -> f64 {
        let r = self.max() / self.min();
        r * r
    }
}

fn validate(values: &[f64]) -> Result<(), OperatorError> {
    if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        if v == 0.0 {
            return Err(OperatorError::SingularSpectrum { index: i });
        }
        return Err(OperatorError::InvalidArgument(format!(
            "singular value {i} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_values_stay_in_shifted_interval() {
        let s = Spectrum::uniform(10_000, 0.0, 10.0, 0.1, 3).unwrap();
        assert!(s.values().iter().all(|&v| v > 0.1 && v <= 10.1));
        assert_eq!(s, Spectrum::uniform(10_000, 0.0, 10.0, 0.1, 3).unwrap());
    }

    #[test]
    fn alternating_starts_with_odd_value() {
        let s = Spectrum::alternating(5, 0.1, 100.0).unwrap();
        assert_eq!(s.values(), &[0.1, 100.0, 0.1, 100.0, 0.1]);
        assert!((s.kappa_ata() - 1e6).abs() < 1e-3);
    }

    #[test]
    fn zero_singular_value_is_rejected() {
        let err = Spectrum::explicit(vec![1.0, 0.0]).unwrap_err();
        assert!(matches!(err, OperatorError::SingularSpectrum { index: 1 }));
        assert!(Spectrum::explicit(vec![-1.0]).is_err());
    }

    #[test]
    fn kappa_of_two_values() {
        let s = Spectrum::explicit(vec![0.1, 10.1]).unwrap();
        assert!((s.kappa_ata() - 10201.0).abs() < 1e-8);
        assert_eq!(Spectrum::explicit(vec![1.0; 4]).unwrap().kappa_ata(), 1.0);
    }

    #[test]
    fn decade_family_reaches_expected_conditioning() {
        // sigma in (0.1, 10.1]; with many draws max -> 10.1 and min -> 0.1
        let s = Spectrum::uniform_decades(1 << 16, 1, 0.1, 9).unwrap();
        let k = s.kappa_ata();
        assert!(k > 5e3 && k <= 10201.0 + 1e-6, "kappa = {k}");
    }
}
