use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Scalar, UNIT_SUM_TOLERANCE};

/// Raw backend outputs within this distance of unit sum are rescaled; beyond
/// it they are rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("{component} is not a finite number")]
    NonFinite { component: &'static str },
    #[error("{component} is negative ({value})")]
    Negative { component: &'static str, value: f64 },
    #[error("probabilities sum to {sum}, more than {tolerance} away from 1")]
    SumDeviation { sum: f64, tolerance: f64 },
}

/// Three-way entailment probabilities for one premise/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentDistribution<T> {
    pub entailment: T,
    pub neutral: T,
    pub contradiction: T,
}

fn check_components<T: Scalar>(parts: [(&'static str, T); 3]) -> Result<T, DistributionError> {
    let mut sum = T::zero();
    for (component, value) in parts {
        if !value.is_finite() {
            return Err(DistributionError::NonFinite { component });
        }
        if value < T::zero() {
            return Err(DistributionError::Negative {
                component,
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
        sum = sum + value;
    }
    Ok(sum)
}

fn deviation_error<T: Scalar>(sum: T, tolerance: f64) -> DistributionError {
    DistributionError::SumDeviation {
        sum: sum.to_f64().unwrap_or(f64::NAN),
        tolerance,
    }
}

impl<T: Scalar> EntailmentDistribution<T> {
    /// Strict constructor: non-negative, finite, unit sum within 1e-6.
    pub fn new(entailment: T, neutral: T, contradiction: T) -> Result<Self, DistributionError> {
        let sum = check_components([
            ("entailment", entailment),
            ("neutral", neutral),
            ("contradiction", contradiction),
        ])?;
        if (sum - T::one()).abs() > T::of(UNIT_SUM_TOLERANCE) {
            return Err(deviation_error(sum, UNIT_SUM_TOLERANCE));
        }
        Ok(Self {
            entailment,
            neutral,
            contradiction,
        })
    }

    /// Admits a raw backend output: rescales sums within
    /// [`RENORMALIZE_TOLERANCE`] of one, rejects anything further off.
    pub fn admit(entailment: T, neutral: T, contradiction: T) -> Result<Self, DistributionError> {
        let sum = check_components([
            ("entailment", entailment),
            ("neutral", neutral),
            ("contradiction", contradiction),
        ])?;
        if (sum - T::one()).abs() > T::of(RENORMALIZE_TOLERANCE) {
            return Err(deviation_error(sum, RENORMALIZE_TOLERANCE));
        }
        Ok(Self {
            entailment: entailment / sum,
            neutral: neutral / sum,
            contradiction: contradiction / sum,
        })
    }

    pub fn uniform() -> Self {
        let third = T::one() / T::of(3.0);
        Self {
            entailment: third,
            neutral: third,
            contradiction: third,
        }
    }

    /// Exchanges entailment and contradiction.
    pub fn swapped(self) -> Self {
        Self {
            entailment: self.contradiction,
            neutral: self.neutral,
            contradiction: self.entailment,
        }
    }

    pub fn sum(&self) -> T {
        self.entailment + self.neutral + self.contradiction
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_accepts_valid() {
        let d = EntailmentDistribution::new(0.9, 0.05, 0.05).unwrap();
        assert_eq!(d.entailment, 0.9);
    }

    #[test]
    fn strict_rejects_negative() {
        assert!(matches!(
            EntailmentDistribution::new(0.6, 0.6, -0.2),
            Err(DistributionError::Negative {
                component: "contradiction",
                ..
            })
        ));
    }

    #[test]
    fn admit_rejects_large_deviation() {
        match EntailmentDistribution::admit(0.5, 0.3, 0.1) {
            Err(DistributionError::SumDeviation { sum, tolerance }) => {
                assert!((sum - 0.9).abs() < 1e-12);
                assert_eq!(tolerance, 1e-3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn admit_renormalizes_small_deviation() {
        let d = EntailmentDistribution::<f64>::admit(0.5005, 0.3, 0.2).unwrap();
        // each component divided by 1.0005
        assert!((d.entailment - 0.5005 / 1.0005).abs() < 1e-15);
        assert!((d.entailment - 0.500_249_875_062_468_8).abs() < 1e-12);
        assert!((d.neutral - 0.299_850_074_962_518_7).abs() < 1e-12);
        assert!((d.contradiction - 0.199_900_049_975_012_5).abs() < 1e-12);
        assert!((d.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn admit_rejects_nan() {
        assert!(matches!(
            EntailmentDistribution::admit(f64::NAN, 0.5, 0.5),
            Err(DistributionError::NonFinite {
                component: "entailment"
            })
        ));
    }

    #[test]
    fn f32_works() {
        let d = EntailmentDistribution::<f32>::admit(0.2, 0.3, 0.5004).unwrap();
        assert!((d.sum() - 1.0).abs() < 1e-6);
    }
}
