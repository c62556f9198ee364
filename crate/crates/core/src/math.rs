//! Scalar helpers shared by the observer and the sliding-mode controllers.
//!
//! The sliding-mode literature writes `sig^a(x)` for the odd power function
//! `|x|^a · sign(x)`; it is continuous at the origin for `a > 0` and is the
//! building block of every surface and reaching law in this crate. `sat`
//! is the usual boundary-layer replacement for `sign` used to suppress
//! chattering.

/// Odd power function `|x|^a · sign(x)`, with `sig_pow(0, a) = 0`.
///
/// Continuous for `a > 0`, differentiable away from zero. `a` is expected
/// to be positive; fractional exponents are the common case.
#[inline]
pub fn sig_pow(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(a) * x.signum()
    }
}

/// Saturated sign: `x/delta` inside the boundary layer `|x| <= delta`,
/// `sign(x)` outside. `delta` must be positive.
#[inline]
pub fn sat(x: f64, delta: f64) -> f64 {
    debug_assert!(delta > 0.0, "sat boundary must be positive");
    if x.abs() <= delta {
        x / delta
    } else {
        x.signum()
    }
}

/// Plain sign with `sign(0) = 0`, matching the convention used in the
/// switching laws (an exactly-zero argument contributes nothing).
#[inline]
pub fn sign(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum()
    }
}
