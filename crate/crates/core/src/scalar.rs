//! Scalar abstraction for the numeric core.
//!
//! Math-heavy modules are generic over [`Scalar`] so the same routines run at
//! `f32` or `f64`. The pipeline instantiates everything at [`crate::Real`].

use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar with the sampling hooks the simulator needs.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// One standard-normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw from `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Conversion from `f64` constants; panics only on non-finite overflow,
    /// which cannot happen for the constants used in this crate.
    fn from_f64c(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable")
    }

    fn to_f64c(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Scalar for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen()
    }
}

impl Scalar for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen()
    }
}

/// Numerically stable logistic function; never overflows for finite input.
pub fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Inverse of [`sigmoid`] on `(0, 1)`.
pub fn logit<F: Scalar>(p: F) -> F {
    (p / (F::one() - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_midpoint_and_ln3() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((sigmoid(3.0f64.ln()) - 0.75).abs() < 1e-15);
        assert!((sigmoid(-3.0f64.ln()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_is_stable_in_the_tails() {
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert!(sigmoid(800.0f64) <= 1.0);
        assert!((sigmoid(800.0f64) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logit_inverts_sigmoid() {
        for &x in &[-5.0f64, -0.3, 0.0, 1.7, 9.0] {
            assert!((logit(sigmoid(x)) - x).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_at_f32() {
        assert_eq!(sigmoid(0.0f32), 0.5f32);
        let x = f32::from_f64c(0.25);
        assert_eq!(x, 0.25f32);
    }
}
