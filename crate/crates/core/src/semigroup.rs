//! Linear propagators, all applied as exact Fourier multipliers.
//!
//! | propagator | multiplier |
//! |---|---|
//! | Airy group `exp(-t d^3/dx^3)` | `exp(i t xi^3)` |
//! | KdV-Burgers semigroup `S(t)`, `t >= 0` | `exp(i t xi^3 - t xi^2)` |
//! | two-parameter `W(t, t')` | `exp(i t xi^3 - abs(t') xi^2)` |
//! | heat flow | `exp(-t xi^2)` |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::field::SpectralField;
use crate::spectral::grid::{FrequencyGrid, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Propagator<T> {
    Airy { t: T },
    KdvbSemigroup { t: T },
    TwoParameter { t: T, t_prime: T },
    HeatOnly { t: T },
}

impl<T: Real> Propagator<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Propagator::KdvbSemigroup { t } | Propagator::HeatOnly { t } if t < T::zero() => {
                Err(Error::NegativeTime(t.to_f64_lossy()))
            }
            _ => Ok(()),
        }
    }

    pub fn multiplier(&self, xi: T) -> Cplx<T> {
        let xi2 = xi * xi;
        let (phase, decay) = match *self {
            Propagator::Airy { t } => (t * xi2 * xi, T::zero()),
            Propagator::KdvbSemigroup { t } => (t * xi2 * xi, t * xi2),
            Propagator::TwoParameter { t, t_prime } => (t * xi2 * xi, t_prime.abs() * xi2),
            Propagator::HeatOnly { t } => (T::zero(), t * xi2),
        };
        Cplx::from_polar((-decay).exp(), phase)
    }

    pub fn apply(&self, field: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.validate()?;
        Ok(field.apply_multiplier(true, |xi| self.multiplier(xi)))
    }
}

pub fn airy_propagate<T: Real>(field: &SpectralField<T>, t: T) -> SpectralField<T> {
    Propagator::Airy { t }.apply(field).expect("airy group is defined for all t")
}

pub fn w_propagate<T: Real>(field: &SpectralField<T>, t: T, t_prime: T) -> SpectralField<T> {
    Propagator::TwoParameter { t, t_prime }.apply(field).expect("W is defined for all t, t'")
}

pub fn s_propagate<T: Real>(field: &SpectralField<T>, t: T) -> Result<SpectralField<T>> {
    Propagator::KdvbSemigroup { t }.apply(field)
}

pub fn heat_propagate<T: Real>(field: &SpectralField<T>, t: T) -> Result<SpectralField<T>> {
    Propagator::HeatOnly { t }.apply(field)
}

/// Linear part used by the nonlinear solvers. The symbol is `i a xi^3 - d xi^2` with
/// `a, d in {0, 1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearKernel {
    /// `u_t + u_xxx - u_xx + u u_x = 0`.
    #[default]
    KdvBurgers,
    /// `u_t + u_xxx + u u_x = 0`.
    Kdv,
    /// `u_t - u_xx + u u_x = 0`.
    Burgers,
}

impl LinearKernel {
    pub fn has_dispersion(self) -> bool {
        !matches!(self, LinearKernel::Burgers)
    }

    pub fn has_dissipation(self) -> bool {
        !matches!(self, LinearKernel::Kdv)
    }

    /// Dispersive phase rate `a xi^3`.
    pub fn phase_rate<T: Real>(self, xi: T) -> T {
        if self.has_dispersion() { xi * xi * xi } else { T::zero() }
    }

    /// Dissipation rate `d xi^2`.
    pub fn decay_rate<T: Real>(self, xi: T) -> T {
        if self.has_dissipation() { xi * xi } else { T::zero() }
    }

    /// `exp(t (i a xi^3 - d xi^2))`, for `t >= 0`.
    pub fn evolve<T: Real>(self, xi: T, t: T) -> Cplx<T> {
        Cplx::from_polar((-t * self.decay_rate(xi)).exp(), t * self.phase_rate(xi))
    }
}

/// Discrete local smoothing ratio `||d/dx exp(-t d^3/dx^3) phi||_{L^inf_x L^2_t} / ||phi||_{L^2}`.
///
/// The time integral is the trapezoid rule over all nodes of `window`; the supremum in `x`
/// is the maximum over grid points.
pub fn kato_ratio<T: Real>(phi: &SpectralField<T>, window: &TimeGrid<T>) -> T {
    let grid: FrequencyGrid<T> = *phi.grid();
    let d = phi.derivative();
    let nodes = window.nodes();
    let dt = window.dt();
    let half = T::lit(0.5);
    let mut acc = vec![T::zero(); grid.n_modes()];
    for (j, &t) in nodes.iter().enumerate() {
        let w = if j == 0 || j + 1 == nodes.len() { half * dt } else { dt };
        let vals = airy_propagate(&d, t).to_physical_complex();
        for (a, v) in acc.iter_mut().zip(vals) {
            *a = *a + w * v.norm_sqr();
        }
    }
    let sup = acc.into_iter().fold(T::zero(), T::max).sqrt();
    sup / phi.l2_norm()
}

/// Largest value of `<xi>^gain exp(-t xi^2)` over the grid, the factor by which
/// `S(t)` maps `H^s` into `H^{s + gain}`.
pub fn smoothing_factor<T: Real>(grid: &FrequencyGrid<T>, gain: T, t: T) -> T {
    grid.frequencies()
        .into_iter()
        .map(|xi| crate::spectral::bracket(xi).powf(gain) * (-t * xi * xi).exp())
        .fold(T::zero(), T::max)
}
