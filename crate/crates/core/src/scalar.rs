//! Floating-point abstraction shared by every numeric component.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Which concrete scalar a model was trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::F32 => "f32",
            Self::F64 => "f64",
        })
    }
}

/// Real scalar the pipeline can be instantiated over (`f32` or `f64`).
///
/// Persisted state is always widened to `f64`, so models trained in either
/// precision share one bundle format.
pub trait Scalar:
    'static
    + Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
{
    const PRECISION: Precision;

    /// Converts an `f64` constant into this scalar.
    #[inline]
    fn of(x: f64) -> Self {
        // from_f64 never fails for f32/f64 (out-of-range values saturate to inf)
        Self::from_f64(x).unwrap()
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).unwrap()
    }

    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().unwrap()
    }
}

impl Scalar for f32 {
    const PRECISION: Precision = Precision::F32;
}

impl Scalar for f64 {
    const PRECISION: Precision = Precision::F64;
}

/// Logistic function `1 / (1 + exp(-t))`, evaluated without overflow.
#[inline]
pub fn sigmoid<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + exp(t))` without overflow for large `t`.
#[inline]
pub fn softplus<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_saturates_cleanly() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((sigmoid(3.0f64.ln()) - 0.75).abs() < 1e-15);
        let lo = sigmoid(-1000.0f64);
        assert!((0.0..=1e-300).contains(&lo));
        assert_eq!(sigmoid(1e4f64), 1.0);
        assert!(sigmoid(-1e4f32).is_finite());
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for &t in &[-20.0f64, -1.0, 0.0, 0.5, 10.0] {
            let naive = (1.0 + t.exp()).ln();
            assert!((softplus(t) - naive).abs() < 1e-12);
        }
        assert_eq!(softplus(1e4f64), 1e4);
    }
}
