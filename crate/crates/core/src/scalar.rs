use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Anything the counting code can divide with: floats and exact rationals.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    /// Ratio of two integers, rounded once (floats) or exact (rationals).
    fn ratio(num: i128, den: i128) -> Self {
        Self::from_i128(num).expect("numerator representable")
            / Self::from_i128(den).expect("denominator representable")
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display {}

/// Floating-point scalars used by the classifiers (f32 / f64).
pub trait Real: Scalar + Float + Sum + Default + Send + Sync + Serialize + DeserializeOwned + 'static {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
