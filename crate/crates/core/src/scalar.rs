//! Scalar abstraction for the closed-form physics.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point type the analytic formulas are written against.
///
/// Implemented for `f32` and `f64`. The Monte Carlo engine and the
/// configuration types are fixed to `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase<T: Real>(phase: T) -> T {
    let two_pi = T::TAU();
    let mut wrapped = phase % two_pi;
    if wrapped < T::zero() {
        wrapped = wrapped + two_pi;
    }
    // `x + 2π` can round up to exactly 2π for tiny negative x.
    if wrapped >= two_pi {
        wrapped = T::zero();
    }
    wrapped
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn wrap_stays_in_half_open_interval() {
        for &x in &[0.0, TAU, -TAU, 3.0 * PI, -1e-18, -PI / 2.0, 100.0] {
            let w = wrap_phase(x);
            assert!((0.0..TAU).contains(&w), "{x} -> {w}");
        }
        assert_eq!(wrap_phase(-1e-18_f64), 0.0);
        assert!((wrap_phase(-PI / 2.0) - 1.5 * PI).abs() < 1e-12);
        assert!((wrap_phase(5.0_f32) - 5.0).abs() < 1e-6);
    }
}
