use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::dyadic::{BlockSelector, DyadicIndex, DyadicRange};
use crate::spectral::fft::FftPair;
use crate::spectral::field::{frequency_range, SpectralField};
use crate::spectral::grid::{FrequencyGrid, TimeGrid};

/// Function of `(t, x)` stored through its space-time transform in the modulation frame.
///
/// With the profile `v_hat(t, xi) = exp(-i t xi^3) u_hat(t, xi)` the stored coefficients are
/// `v_tilde(sigma, xi) = int v_hat(t, xi) exp(-i t sigma) dt`, and
/// `u_tilde(tau, xi) = v_tilde(tau - xi^3, xi)`. Modulation cutoffs are then plain
/// multipliers in `sigma`, and Airy waves need no `tau` range proportional to `xi^3`.
///
/// The time variable is periodic over the grid window, so fields are expected to be
/// supported well inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField<T: Real> {
    tgrid: TimeGrid<T>,
    xgrid: FrequencyGrid<T>,
    /// `coeffs[k * n_t + m]`: frequency slot `k`, modulation slot `m`, both in FFT order.
    coeffs: Vec<Cplx<T>>,
    real: bool,
}

fn rotate<T: Real>(angle: T) -> Cplx<T> {
    Cplx::new(angle.cos(), angle.sin())
}

impl<T: Real> SpaceTimeField<T> {
    pub fn zeros(tgrid: TimeGrid<T>, xgrid: FrequencyGrid<T>) -> Self {
        let len = tgrid.n_steps() * xgrid.n_modes();
        Self { tgrid, xgrid, coeffs: vec![Cplx::zero(); len], real: true }
    }

    /// Wraps coefficients in the storage order of [`Self::coeffs`].
    pub fn from_coeffs(tgrid: TimeGrid<T>, xgrid: FrequencyGrid<T>, coeffs: Vec<Cplx<T>>, real: bool) -> Result<Self> {
        let len = tgrid.n_steps() * xgrid.n_modes();
        if coeffs.len() != len {
            return Err(Error::SizeMismatch { expected: len, got: coeffs.len() });
        }
        Ok(Self { tgrid, xgrid, coeffs, real })
    }

    /// Builds the field from spatial transforms at the periodic time nodes
    /// (`slices[j]` holds `u_hat(t_j, .)`).
    pub fn from_time_slices(
        tgrid: TimeGrid<T>,
        xgrid: FrequencyGrid<T>,
        slices: &[Vec<Cplx<T>>],
        real: bool,
    ) -> Result<Self> {
        let nt = tgrid.n_steps();
        let nx = xgrid.n_modes();
        if slices.len() != nt {
            return Err(Error::SizeMismatch { expected: nt, got: slices.len() });
        }
        if let Some(bad) = slices.iter().find(|s| s.len() != nx) {
            return Err(Error::SizeMismatch { expected: nx, got: bad.len() });
        }
        let times = tgrid.periodic_nodes();
        let fft = FftPair::new(nt);
        let dt = tgrid.dt();
        let start = tgrid.start();
        let mut coeffs = vec![Cplx::zero(); nt * nx];
        for (k, row) in coeffs.chunks_mut(nt).enumerate() {
            let xi = xgrid.xi(k);
            let xi3 = xi * xi * xi;
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = slices[j][k] * rotate(-times[j] * xi3);
            }
            fft.forward(row);
            for (m, slot) in row.iter_mut().enumerate() {
                *slot = *slot * rotate(-start * tgrid.sigma(m)) * dt;
            }
        }
        Ok(Self { tgrid, xgrid, coeffs, real })
    }

    /// Samples `f(t)` at the periodic nodes.
    pub fn from_fn(
        tgrid: TimeGrid<T>,
        xgrid: FrequencyGrid<T>,
        mut f: impl FnMut(T) -> SpectralField<T>,
    ) -> Result<Self> {
        let mut real = true;
        let mut slices = Vec::with_capacity(tgrid.n_steps());
        for t in tgrid.periodic_nodes() {
            let s = f(t);
            if s.grid() != &xgrid {
                return Err(Error::InvalidArgument("slice grid differs from the field grid".into()));
            }
            real &= s.is_real();
            slices.push(s.into_coeffs());
        }
        Self::from_time_slices(tgrid, xgrid, &slices, real)
    }

    /// Inverse of [`Self::from_time_slices`].
    pub fn time_slices(&self) -> Vec<Vec<Cplx<T>>> {
        let nt = self.tgrid.n_steps();
        let nx = self.xgrid.n_modes();
        let times = self.tgrid.periodic_nodes();
        let fft = FftPair::new(nt);
        let start = self.tgrid.start();
        let inv_len = self.tgrid.length().recip();
        let mut out = vec![vec![Cplx::zero(); nx]; nt];
        let mut row = vec![Cplx::zero(); nt];
        for k in 0..nx {
            for (m, slot) in row.iter_mut().enumerate() {
                *slot = self.coeffs[k * nt + m] * rotate(start * self.tgrid.sigma(m)) * inv_len;
            }
            fft.inverse(&mut row);
            let xi = self.xgrid.xi(k);
            let xi3 = xi * xi * xi;
            for j in 0..nt {
                out[j][k] = row[j] * rotate(times[j] * xi3);
            }
        }
        out
    }

    pub fn slice_fields(&self) -> Vec<SpectralField<T>> {
        self.time_slices()
            .into_iter()
            .map(|c| SpectralField::from_coeffs(self.xgrid, c, self.real).expect("slice length"))
            .collect()
    }

    /// Physical samples `u(t_j, x_k)`, row `j` per time node.
    pub fn physical(&self) -> Vec<Vec<Cplx<T>>> {
        self.slice_fields().iter().map(|f| f.to_physical_complex()).collect()
    }

    pub fn tgrid(&self) -> &TimeGrid<T> {
        &self.tgrid
    }

    pub fn xgrid(&self) -> &FrequencyGrid<T> {
        &self.xgrid
    }

    pub fn coeffs(&self) -> &[Cplx<T>] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient at frequency slot `k` and modulation slot `m`.
    pub fn coeff(&self, k: usize, m: usize) -> Cplx<T> {
        self.coeffs[k * self.tgrid.n_steps() + m]
    }

    /// Space-time measure `(dsigma / 2pi)(dxi / 2pi)`.
    pub fn measure(&self) -> T {
        self.tgrid.dsigma() / T::TAU() * self.xgrid.measure()
    }

    pub fn l2_norm(&self) -> T {
        (self.coeffs.iter().fold(T::zero(), |a, c| a + c.norm_sqr()) * self.measure()).sqrt()
    }

    /// Relative violation of `v(-sigma, -xi) = conj(v(sigma, xi))`, Nyquist slots skipped.
    pub fn hermitian_defect(&self) -> T {
        let nt = self.tgrid.n_steps();
        let nx = self.xgrid.n_modes();
        let scale = self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for k in 1..nx {
            if k == nx / 2 {
                continue;
            }
            let kk = nx - k;
            for m in 0..nt {
                if m == nt / 2 {
                    continue;
                }
                let mm = (nt - m) % nt;
                worst = worst.max((self.coeff(k, m) - self.coeff(kk, mm).conj()).norm());
            }
        }
        for m in 1..nt / 2 {
            worst = worst.max((self.coeff(0, m) - self.coeff(0, nt - m).conj()).norm());
        }
        worst / scale
    }

    /// Multiplier `m(sigma, xi)` in the modulation frame. `preserves_realness` asserts
    /// `m(-sigma, -xi) = conj(m(sigma, xi))`.
    pub fn apply_multiplier(&self, preserves_realness: bool, m: impl Fn(T, T) -> Cplx<T>) -> Self {
        let nt = self.tgrid.n_steps();
        let sigmas: Vec<T> = (0..nt).map(|j| self.tgrid.sigma(j)).collect();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| c * m(sigmas[idx % nt], self.xgrid.xi(idx / nt)))
            .collect();
        Self { tgrid: self.tgrid, xgrid: self.xgrid, coeffs, real: self.real && preserves_realness }
    }

    pub fn apply_real_multiplier(&self, m: impl Fn(T, T) -> T) -> Self {
        self.apply_multiplier(true, |s, x| Cplx::new(m(s, x), T::zero()))
    }

    pub fn scale(&self, a: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&c| c * a).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect();
        Ok(Self { tgrid: self.tgrid, xgrid: self.xgrid, coeffs, real: self.real && other.real })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-T::one()))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.tgrid != other.tgrid || self.xgrid != other.xgrid {
            return Err(Error::InvalidArgument("space-time fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn frequency_range(&self) -> DyadicRange {
        frequency_range(&self.xgrid)
    }

    /// Dyadic range of the modulation variable `tau - xi^3`.
    pub fn modulation_range(&self) -> DyadicRange {
        DyadicRange::covering(self.tgrid.dsigma().to_f64_lossy(), self.tgrid.sigma_nyquist().to_f64_lossy())
    }

    /// `P_N u`.
    pub fn project_n(&self, n: DyadicIndex) -> Result<Self> {
        let range = self.frequency_range();
        range.check(n, "frequency")?;
        Ok(self.apply_real_multiplier(|_, xi| range.multiplier(n, xi)))
    }

    /// `Q_L u`.
    pub fn project_l(&self, l: DyadicIndex) -> Result<Self> {
        let range = self.modulation_range();
        if l > range.hi {
            return Err(Error::resolution(
                format!("modulation block {l} exceeds the resolved range up to {}", range.hi),
                "increase n_steps",
            ));
        }
        range.check(l, "modulation")?;
        Ok(self.apply_real_multiplier(|sigma, _| range.multiplier(l, sigma)))
    }

    pub fn project_range_n(&self, sel: BlockSelector) -> Self {
        let range = self.frequency_range();
        self.apply_real_multiplier(|_, xi| sel.multiplier(&range, xi))
    }

    pub fn project_range_l(&self, sel: BlockSelector) -> Self {
        let range = self.modulation_range();
        self.apply_real_multiplier(|sigma, _| sel.multiplier(&range, sigma))
    }

    /// `(d/dt + d^3/dx^3 - d^2/dx^2 + I)`, symbol `i sigma + xi^2 + 1`.
    pub fn kdvb_operator(&self) -> Self {
        self.apply_multiplier(true, |sigma, xi| Cplx::new(xi * xi + T::one(), sigma))
    }

    /// `(d/dt + d^3/dx^3)`, symbol `i sigma`.
    pub fn airy_operator(&self) -> Self {
        self.apply_multiplier(true, |sigma, _| Cplx::new(T::zero(), sigma))
    }

    /// `d/dx`.
    pub fn derivative(&self) -> Self {
        self.apply_multiplier(true, |_, xi| Cplx::new(T::zero(), xi))
    }
}

/// Physical space-time `L^2` norm of samples on the periodic nodes.
pub fn physical_l2_spacetime<T: Real>(tgrid: &TimeGrid<T>, xgrid: &FrequencyGrid<T>, rows: &[Vec<Cplx<T>>]) -> T {
    let s = rows.iter().flatten().fold(T::zero(), |a, c| a + c.norm_sqr());
    (s * tgrid.dt() * xgrid.dx()).sqrt()
}
