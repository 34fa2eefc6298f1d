//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All matrix code, estimators and normalizing-constant backends are written
//! against [`Real`], so the same code runs in `f64` (the default used by the
//! CLI and the crate-root aliases) or `f32`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Always succeeds for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal is representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }

    /// Default convergence tolerance for iterative solvers in this precision.
    fn default_tol() -> Self;
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-4
    }
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-8
    }
}

/// `ln Γ(x)` evaluated in double precision.
pub fn ln_gamma<T: Real>(x: T) -> T {
    T::lit(statrs::function::gamma::ln_gamma(x.as_f64()))
}

/// Multivariate log-gamma `ln Γ_r(a) = r(r-1)/4 ln π + Σ_{j=1..r} ln Γ(a - (j-1)/2)`.
pub fn ln_multigamma<T: Real>(r: usize, a: T) -> T {
    let rr = T::from_usize_lossy(r);
    let mut acc = rr * (rr - T::one()) / T::lit(4.0) * T::PI().ln();
    for j in 0..r {
        acc += ln_gamma(a - T::from_usize_lossy(j) / T::lit(2.0));
    }
    acc
}

/// Numerically stable `ln Σ exp(x_i)`.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let s: T = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}
