//! Complementary error function and its inverse.
//!
//! `erfc` uses the confluent power series for small arguments and a
//! continued-fraction expansion (modified Lentz) for large ones; `erfc_inv`
//! refines a rational initial approximation with Newton steps on `erfc`.
//! Accuracy at `f64` is a few ulp across the domains the crate uses
//! (relative error well under 1e-7 on [1e-6, 0.5] for both functions).

use crate::num::Scalar;

/// Complementary error function `erfc(x) = 1 - erf(x)`.
///
/// Special cases: `erfc(+inf) = 0`, `erfc(-inf) = 2`, `erfc(NaN) = NaN`.
pub fn erfc<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return T::nan();
    }
    if x == T::infinity() {
        return T::zero();
    }
    if x == T::neg_infinity() {
        return T::from_f64_c(2.0);
    }
    if x < T::zero() {
        return T::from_f64_c(2.0) - erfc(-x);
    }
    let crossover = T::from_f64_c(1.5);
    if x <= crossover {
        T::one() - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// Error function via the all-positive confluent series
/// `erf(x) = (2x/sqrt(pi)) e^{-x^2} sum_n (2x^2)^n / (1*3*...*(2n+1))`.
fn erf_series<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    let two_x2 = T::from_f64_c(2.0) * x2;
    let mut term = T::one();
    let mut sum = T::one();
    let mut denom = T::one();
    for n in 1..200 {
        denom += T::from_f64_c(2.0); // 2n+1
        term = term * two_x2 / denom;
        sum += term;
        if term < sum * T::epsilon() {
            break;
        }
        debug_assert!(n < 199, "erf series did not converge");
    }
    let two_over_sqrt_pi = T::from_f64_c(2.0) / T::PI().sqrt();
    two_over_sqrt_pi * x * (-x2).exp() * sum
}

/// `erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`
/// evaluated with the modified Lentz algorithm. Valid for x >= ~1.
fn erfc_continued_fraction<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    // e^{-x^2} underflows to zero well before the CF loses validity.
    let exp_term = (-x2).exp();
    if exp_term == T::zero() {
        return T::zero();
    }
    let tiny = T::min_positive_value();
    let mut f = tiny;
    let mut c = tiny;
    let mut d = T::zero();
    let half = T::from_f64_c(0.5);
    for n in 0..300 {
        // b_n = x for every level; a_0 = 1, a_n = n/2 for n >= 1
        let a = if n == 0 {
            T::one()
        } else {
            T::from_f64_c(n as f64) * half
        };
        d = x + a * d;
        if d == T::zero() {
            d = tiny;
        }
        c = x + a / c;
        if c == T::zero() {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f *= delta;
        if (delta - T::one()).abs() < T::epsilon() {
            break;
        }
        debug_assert!(n < 299, "erfc continued fraction did not converge");
    }
    exp_term / T::PI().sqrt() * f
}

/// Inverse complementary error function: the `x` with `erfc(x) = p`.
///
/// Domain is `(0, 2)`; returns NaN outside it. A rational approximation of
/// the normal upper-tail quantile provides the initial guess, then Newton
/// iterations on [`erfc`] polish to full precision.
pub fn erfc_inv<T: Scalar>(p: T) -> T {
    let two = T::from_f64_c(2.0);
    if p.is_nan() || p <= T::zero() || p >= two {
        return if p == T::zero() {
            T::infinity()
        } else if p == two {
            T::neg_infinity()
        } else {
            T::nan()
        };
    }
    if p == T::one() {
        return T::zero();
    }
    if p > T::one() {
        return -erfc_inv(two - p);
    }

    // Initial guess: normal quantile of q = p/2 (upper tail), x = z/sqrt(2).
    let q = p / two;
    let t = (-two * q.ln()).sqrt();
    let c0 = T::from_f64_c(2.515517);
    let c1 = T::from_f64_c(0.802853);
    let c2 = T::from_f64_c(0.010328);
    let d1 = T::from_f64_c(1.432788);
    let d2 = T::from_f64_c(0.189269);
    let d3 = T::from_f64_c(0.001308);
    let z = t - (c0 + t * (c1 + t * c2)) / (T::one() + t * (d1 + t * (d2 + t * d3)));
    let mut x = z / two.sqrt();

    // Newton on erfc: d/dx erfc(x) = -2 e^{-x^2}/sqrt(pi).
    let sqrt_pi = T::PI().sqrt();
    for _ in 0..4 {
        let err = erfc(x) - p;
        let deriv = -two * (-x * x).exp() / sqrt_pi;
        let step = err / deriv;
        x -= step;
        if step.abs() <= x.abs() * T::epsilon() {
            break;
        }
    }
    x
}
