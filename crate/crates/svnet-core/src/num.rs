//! Scalar abstraction for the numeric kernels.
//!
//! Everything information-theoretic or probabilistic in this crate is
//! written against [`Real`] so the same code runs on `f32` and `f64`.
//! The pipeline instantiates `f64` (see the crate-root aliases).

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar for probability and codelength arithmetic.
pub trait Real: Float + FromPrimitive + Sum + Debug + Send + Sync + 'static {
    /// Lossy conversion from an integer count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// Lossy conversion from `f64` (used to feed precomputed constants).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 representable in scalar type")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + Sum + Debug + Send + Sync + 'static {}

/// `x * log2(x)` with the continuity convention `0 log 0 = 0`.
///
/// Negative inputs are treated as zero; they only arise from floating-point
/// cancellation in incremental updates.
pub fn plogp<F: Real>(x: F) -> F {
    if x <= F::zero() {
        F::zero()
    } else {
        x * x.log2()
    }
}

/// Shannon entropy in bits of a normalized distribution.
pub fn entropy<F: Real>(probs: impl IntoIterator<Item = F>) -> F {
    -probs.into_iter().map(plogp).sum::<F>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plogp_zero_convention() {
        assert_eq!(plogp(0.0_f64), 0.0);
        assert_eq!(plogp(-1e-18_f64), 0.0);
        assert_eq!(plogp(0.25_f64), -0.5);
    }

    #[test]
    fn entropy_uniform() {
        let h: f64 = entropy([0.25; 4]);
        assert_eq!(h, 2.0);
        let h32: f32 = entropy([0.5_f32; 2]);
        assert_eq!(h32, 1.0);
    }
}
