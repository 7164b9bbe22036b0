use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point sample type used throughout the numeric modules: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + rustfft::FftNum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Mean of `|x|^2` computed with a sequential sum so results are reproducible.
pub fn mean_square<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    let mut acc = T::zero();
    for &x in xs {
        acc += x * x;
    }
    acc / T::from_usize_lossy(xs.len())
}

/// `10 log10(x)`.
pub fn to_db<T: Scalar>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// Inverse of [`to_db`].
pub fn from_db<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}
