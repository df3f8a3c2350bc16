//! Scalar abstraction shared by the MNL model and its oracles.
//!
//! The structural code (expected revenue, level sets, the potential profile,
//! brute-force oracles, the chi-square KL bound) only needs field arithmetic
//! and a total order on non-NaN values, so it is written once against
//! [`Scalar`] and instantiated with `f64`, `f32`, or an exact rational.

use num::{BigInt, BigRational, Signed, Zero};
use num_traits::{FromPrimitive, Num, ToPrimitive};
use std::fmt::Debug;

/// Exact rational arithmetic, used for oracle checks that must not round.
pub type Exact = BigRational;

pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {
    /// Absolute tolerance used when deciding that two computed values are the
    /// same plateau of the potential function. Zero for exact types.
    fn tolerance() -> Self;

    /// `sqrt(n)` when it is representable in this type (always for floats,
    /// only for perfect squares for rationals).
    fn sqrt_of(n: u64) -> Option<Self>;

    /// Finite and not NaN.
    fn is_finite_value(&self) -> bool;

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }

    fn approx_eq(&self, other: &Self) -> bool {
        let diff = self.clone() - other.clone();
        diff.abs_value() <= Self::tolerance()
    }

    /// Lossy view for sampling and reporting.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-12
    }

    fn sqrt_of(n: u64) -> Option<Self> {
        Some((n as f64).sqrt())
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-6
    }

    fn sqrt_of(n: u64) -> Option<Self> {
        Some((n as f32).sqrt())
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn sqrt_of(n: u64) -> Option<Self> {
        let root = BigInt::from(n).sqrt();
        if &root * &root == BigInt::from(n) {
            Some(BigRational::from_integer(root))
        } else {
            None
        }
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// Builds `numer / denom` in any scalar type.
pub fn ratio<S: Scalar>(numer: i64, denom: i64) -> S {
    let n = S::from_i64(numer).expect("integer representable");
    let d = S::from_i64(denom).expect("integer representable");
    n / d
}

/// Exact rational `numer / denom`.
pub fn exact(numer: i64, denom: i64) -> Exact {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
