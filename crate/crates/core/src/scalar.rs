//! Scalar abstraction for the probability and correlation math.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point type usable for distributions, means and correlations.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; used for tolerances and literals.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Scalar")
    }

    /// Conversion from a count.
    fn of_count(value: usize) -> Self {
        Self::from_usize(value).expect("count is representable in every Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Absolute deviation tolerated between an admitted distribution's sum and one.
pub const UNIT_SUM_TOLERANCE: f64 = 1e-6;
