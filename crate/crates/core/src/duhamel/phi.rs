//! Exponential integrator functions `phi_k(z) = sum_j z^j / (j + k)!` for complex `z`.

use num_traits::Zero;

use crate::scalar::{Cplx, Real};

const SERIES_RADIUS: f64 = 0.5;
const SERIES_TERMS: usize = 24;

/// `[phi_0(z), ..., phi_{K-1}(z)]`.
pub fn phi_functions<T: Real, const K: usize>(z: Cplx<T>) -> [Cplx<T>; K] {
    let mut out = [Cplx::zero(); K];
    if K == 0 {
        return out;
    }
    out[0] = z.exp();
    if z.norm() < T::lit(SERIES_RADIUS) {
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            // Horner over the tail coefficients 1/(j + k)!
            let mut acc = Cplx::zero();
            for j in (0..SERIES_TERMS).rev() {
                acc = acc * z + Cplx::from(inv_factorial::<T>(j + k));
            }
            *slot = acc;
        }
    } else {
        for k in 1..K {
            out[k] = (out[k - 1] - Cplx::from(inv_factorial::<T>(k - 1))) / z;
        }
    }
    out
}

fn inv_factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc / T::from_usize_lossy(k))
}

/// `phi_1(z) = (e^z - 1) / z`.
pub fn phi1<T: Real>(z: Cplx<T>) -> Cplx<T> {
    phi_functions::<T, 2>(z)[1]
}

/// `int_0^c exp(z (c - s)) s^p ds = c^{p+1} p! phi_{p+1}(z c)` for `p = 0..P`, `P <= 3`.
pub fn monomial_convolutions<T: Real, const P: usize>(z: Cplx<T>, c: T) -> [Cplx<T>; P] {
    assert!(P <= 3, "polynomial degree too high");
    let f = phi_functions::<T, 4>(z * c);
    let mut out = [Cplx::zero(); P];
    let mut scale = c;
    for (p, slot) in out.iter_mut().enumerate() {
        *slot = f[p + 1] * scale;
        scale = scale * c * T::from_usize_lossy(p + 1);
    }
    out
}
