use num_traits::Zero;

use crate::duhamel::phi::phi1;
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::field::SpectralField;

/// Below this `|z t|` the bracket `(exp(z t) - 1) / z` is evaluated as `t phi_1(z t)`.
const SERIES_SWITCH: f64 = 0.5;

/// Second Picard coefficient of the KdV-Burgers flow in closed form.
///
/// With `lambda(xi) = i xi^3 - xi^2` and `z = lambda(xi_1) + lambda(xi_2) - lambda(xi)
/// = xi_1 xi_2 (2 - 3 i xi)` for `xi_1 + xi_2 = xi`,
///
/// ```text
/// A2_hat(t, xi) = -(i xi / 2) sum_{xi_1} h_hat(xi_1) h_hat(xi - xi_1)
///                 (exp(lambda_12 t) - exp(lambda t)) / z   dxi / 2pi
/// ```
///
/// summed over pairs of grid frequencies in the support of `h`. Pairs whose sum leaves the
/// grid are dropped, matching the truncated pseudospectral product. The bracket has a
/// removable singularity on the resonant set `xi xi_1 xi_2 = 0`, handled by the series of
/// `phi_1`.
pub fn a2_explicit<T: Real>(t: T, h: &SpectralField<T>) -> Result<SpectralField<T>> {
    if t < T::zero() {
        return Err(Error::NegativeTime(t.to_f64_lossy()));
    }
    let grid = *h.grid();
    let n = grid.n_modes() as i64;
    let scale = h.coeffs().iter().fold(T::zero(), |m, c| m.max(c.norm()));
    let mut out = vec![Cplx::zero(); grid.n_modes()];
    if scale == T::zero() || t == T::zero() {
        return SpectralField::from_coeffs(grid, out, h.is_real());
    }
    let support: Vec<(i64, Cplx<T>)> = (0..grid.n_modes())
        .filter(|&k| h.coeffs()[k] != Cplx::zero())
        .map(|k| (grid.wavenumber(k), h.coeffs()[k]))
        .collect();
    if support.iter().any(|&(m, c)| m == -n / 2 && c.norm() > T::lit(1e-13) * scale) {
        return Err(Error::BandLimit("datum occupies the unpaired Nyquist slot".into()));
    }
    let dxi = grid.spacing();
    let lambda = |xi: T| Cplx::new(-xi * xi, xi * xi * xi);
    let switch = T::lit(SERIES_SWITCH);
    for &(m1, c1) in &support {
        let xi1 = T::from_i64(m1).unwrap() * dxi;
        for &(m2, c2) in &support {
            let m = m1 + m2;
            if m < -n / 2 + 1 || m >= n / 2 {
                continue;
            }
            let xi2 = T::from_i64(m2).unwrap() * dxi;
            let xi = T::from_i64(m).unwrap() * dxi;
            let z = Cplx::new(T::lit(2.0), -T::lit(3.0) * xi) * (xi1 * xi2);
            let lam = lambda(xi);
            let bracket = if (z * t).norm() < switch {
                (lam * t).exp() * phi1(z * t) * t
            } else {
                (((lambda(xi1) + lambda(xi2)) * t).exp() - (lam * t).exp()) / z
            };
            let slot = &mut out[grid.index_of(m).unwrap()];
            *slot = *slot + c1 * c2 * bracket;
        }
    }
    let pref = grid.measure() * T::lit(0.5);
    for (k, c) in out.iter_mut().enumerate() {
        let xi = grid.xi(k);
        // -(i xi / 2) dxi / 2pi
        *c = Cplx::new(c.im * xi, -c.re * xi) * pref;
    }
    SpectralField::from_coeffs(grid, out, h.is_real())
}
