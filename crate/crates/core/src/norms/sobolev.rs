use crate::scalar::Real;
use crate::spectral::bracket;
use crate::spectral::field::SpectralField;

/// `||<xi>^s u_hat||` with the grid measure `dxi / 2pi`.
pub fn sobolev_norm<T: Real>(u: &SpectralField<T>, s: T) -> T {
    u.weighted_l2(|xi| bracket(xi).powf(s))
}

/// [`sobolev_norm`] with the frequency integral restricted to `|xi| <= band`. Grid nodes on
/// the band edge carry half weight (trapezoid rule).
pub fn sobolev_norm_band<T: Real>(u: &SpectralField<T>, s: T, band: T) -> T {
    let tol = T::lit(1e-9) * u.grid().spacing();
    let half = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    u.weighted_l2(|xi| {
        let x = xi.abs();
        if (x - band).abs() <= tol {
            half * bracket(xi).powf(s)
        } else if x < band {
            bracket(xi).powf(s)
        } else {
            T::zero()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Cplx;
    use crate::spectral::grid::FrequencyGrid;

    #[test]
    fn zero_mode_has_unit_norm_for_every_s() {
        let grid = FrequencyGrid::new(std::f64::consts::PI, 16).unwrap();
        // coefficient 1 at xi = 0 carries mass dxi / 2pi; rescale to unit mass
        let c = (std::f64::consts::TAU / grid.spacing()).sqrt();
        let u = SpectralField::from_fn(grid, true, |xi| if xi == 0.0 { Cplx::new(c, 0.0) } else { Cplx::new(0.0, 0.0) });
        for s in [-3.0, -1.0, 0.0, 0.5, 2.0] {
            assert!((sobolev_norm(&u, s) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn band_restriction_is_monotone() {
        let grid = FrequencyGrid::new(4.0 * std::f64::consts::PI, 64).unwrap();
        let u = SpectralField::from_fn(grid, true, |xi| Cplx::new((-xi * xi).exp(), 0.0));
        let full = sobolev_norm(&u, -1.0);
        let half = sobolev_norm_band(&u, -1.0, 0.5);
        assert!(half < full && half > 0.0);
        assert!((sobolev_norm_band(&u, -1.0, 1e9) - full).abs() < 1e-15);
    }

    #[test]
    fn band_edges_get_trapezoid_weight() {
        // |u_hat|^2 = xi^2 on [-1/2, 1/2]: the integral is 1/12, the trapezoid sum is exact up
        // to dxi^2 / 12 times the jump of the derivative
        let grid = FrequencyGrid::new(16.0 * std::f64::consts::PI, 1024).unwrap();
        let u = SpectralField::from_fn(grid, true, |xi| Cplx::new(xi.abs(), 0.0));
        let got = sobolev_norm_band(&u, 0.0, 0.5).powi(2) * std::f64::consts::TAU;
        let dxi = grid.spacing();
        assert!((got - 1.0 / 12.0).abs() < dxi * dxi, "{got}");
    }
}
