//! Scalar abstraction for the geometry kernels.
//!
//! Everything numeric in this crate is written against [`Real`]. `f32`
//! works for quick exploration; the experiment pipeline instantiates
//! `f64`. The iterative eigensolver is the one deliberately non-generic
//! corner (see `spectra`), since subspace iterations want full double
//! precision regardless of the assembly scalar.

use num_traits::float::FloatConst;
use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point scalar usable by every kernel in this crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Copy + std::fmt::Debug + 'static
{
    /// Shorthand for lossy conversion of an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Convenience free function, `c::<T>(0.5)` reads better in formulas than
/// `T::from_f64(0.5).unwrap()`.
#[inline]
pub fn c<T: Real>(x: f64) -> T {
    T::of(x)
}
