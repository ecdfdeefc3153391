//! Smooth cutoffs.
//!
//! The bump is
//!
//! ```text
//! g(y)   = exp(-1/y) for y > 0, 0 otherwise
//! eta(x) = g(2 - |x|) / (g(2 - |x|) + g(|x| - 1))
//! ```
//!
//! which is `C^infinity`, even, equal to 1 on `[-1, 1]`, vanishes for `|x| >= 2` and is
//! monotone in `|x|`. The annular cutoff is `phi(x) = eta(x) - eta(2x)`, supported in
//! `1/2 <= |x| <= 2`, and `phi_N(x) = phi(x / N)`.

use crate::scalar::Real;

fn mollifier_tail<T: Real>(y: T) -> T {
    if y > T::zero() { (-y.recip()).exp() } else { T::zero() }
}

pub fn eta<T: Real>(x: T) -> T {
    let a = x.abs();
    if a <= T::one() {
        return T::one();
    }
    let two = T::lit(2.0);
    if a >= two {
        return T::zero();
    }
    let up = mollifier_tail(two - a);
    let down = mollifier_tail(a - T::one());
    up / (up + down)
}

/// Derivative of [`eta`].
pub fn eta_prime<T: Real>(x: T) -> T {
    let a = x.abs();
    let two = T::lit(2.0);
    if a <= T::one() || a >= two {
        return T::zero();
    }
    // eta = p / (p + q), p = g(2 - a), q = g(a - 1), g'(y) = g(y) / y^2
    let yp = two - a;
    let yq = a - T::one();
    let p = mollifier_tail(yp);
    let q = mollifier_tail(yq);
    let dp = -p / (yp * yp);
    let dq = q / (yq * yq);
    let s = p + q;
    let d = (dp * q - p * dq) / (s * s);
    if x < T::zero() { -d } else { d }
}

pub fn phi<T: Real>(x: T) -> T {
    eta(x) - eta(x + x)
}

/// `phi_N(xi) = phi(xi / N)`.
pub fn phi_n<T: Real>(xi: T, n: T) -> T {
    phi(xi / n)
}

/// Time cutoff `eta_T(t) = eta(t / T)`.
pub fn eta_scaled<T: Real>(t: T, scale: T) -> T {
    eta(t / scale)
}
