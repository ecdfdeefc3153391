use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::dyadic::{BlockSelector, DyadicIndex, DyadicRange};
use crate::spectral::fft::FftPair;
use crate::spectral::grid::FrequencyGrid;

/// Space-periodic function stored as continuum-normalised Fourier coefficients
///
/// `u_hat(xi_m) = sum_j u(x_j) exp(-i x_j xi_m) dx`,
///
/// the grid discretisation of `int u(x) exp(-i x xi) dx`. With the frequency measure
/// `dxi / 2pi` Plancherel holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T: Real> {
    grid: FrequencyGrid<T>,
    coeffs: Vec<Cplx<T>>,
    real: bool,
}

/// `(-1)^m` phase from the left end of the box sitting at `x_0 = -L_x`.
fn shift_sign(m: i64) -> bool {
    m.rem_euclid(2) == 1
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: FrequencyGrid<T>) -> Self {
        Self { grid, coeffs: vec![Cplx::zero(); grid.n_modes()], real: true }
    }

    pub fn from_coeffs(grid: FrequencyGrid<T>, coeffs: Vec<Cplx<T>>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.n_modes() {
            return Err(Error::SizeMismatch { expected: grid.n_modes(), got: coeffs.len() });
        }
        Ok(Self { grid, coeffs, real })
    }

    /// Coefficients from a function of frequency. The realness flag is the caller's claim
    /// and can be audited with [`SpectralField::hermitian_defect`].
    pub fn from_fn(grid: FrequencyGrid<T>, real: bool, f: impl Fn(T) -> Cplx<T>) -> Self {
        let coeffs = (0..grid.n_modes()).map(|i| f(grid.xi(i))).collect();
        Self { grid, coeffs, real }
    }

    pub fn from_physical(grid: FrequencyGrid<T>, samples: &[T]) -> Result<Self> {
        let c: Vec<Cplx<T>> = samples.iter().map(|&v| Cplx::new(v, T::zero())).collect();
        let mut f = Self::from_physical_complex(grid, &c)?;
        f.real = true;
        Ok(f)
    }

    pub fn from_physical_complex(grid: FrequencyGrid<T>, samples: &[Cplx<T>]) -> Result<Self> {
        let n = grid.n_modes();
        if samples.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: samples.len() });
        }
        let mut buf = samples.to_vec();
        FftPair::new(n).forward(&mut buf);
        let dx = grid.dx();
        for (i, c) in buf.iter_mut().enumerate() {
            *c = *c * dx;
            if shift_sign(grid.wavenumber(i)) {
                *c = -*c;
            }
        }
        Ok(Self { grid, coeffs: buf, real: false })
    }

    pub fn to_physical_complex(&self) -> Vec<Cplx<T>> {
        let n = self.grid.n_modes();
        let scale = (self.grid.half_length() + self.grid.half_length()).recip();
        let mut buf: Vec<Cplx<T>> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if shift_sign(self.grid.wavenumber(i)) { -c * scale } else { c * scale })
            .collect();
        FftPair::new(n).inverse(&mut buf);
        buf
    }

    /// Physical samples; the imaginary part is dropped (meaningful for real fields).
    pub fn to_physical(&self) -> Vec<T> {
        self.to_physical_complex().into_iter().map(|c| c.re).collect()
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Cplx<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Cplx<T>> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    pub fn coeff_at(&self, wavenumber: i64) -> Option<Cplx<T>> {
        self.grid.index_of(wavenumber).map(|i| self.coeffs[i])
    }

    /// Largest relative violation of `u_hat(-xi) = conj(u_hat(xi))`. The unpaired Nyquist
    /// slot `-n/2` is skipped.
    pub fn hermitian_defect(&self) -> T {
        let n = self.grid.n_modes() as i64;
        let scale = self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for m in (-n / 2 + 1)..(n / 2) {
            let a = self.coeff_at(m).unwrap();
            let b = self.coeff_at(-m).unwrap();
            worst = worst.max((a - b.conj()).norm());
        }
        worst / scale
    }

    /// `sqrt(sum |u_hat|^2 dxi / 2pi)`, equal to the physical `L^2` norm.
    pub fn l2_norm(&self) -> T {
        self.weighted_l2(|_| T::one())
    }

    /// `sqrt(sum w(xi)^2 |u_hat(xi)|^2 dxi / 2pi)`.
    pub fn weighted_l2(&self, w: impl Fn(T) -> T) -> T {
        let sum = self
            .coeffs
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, c)| {
                let wi = w(self.grid.xi(i));
                acc + wi * wi * c.norm_sqr()
            });
        (sum * self.grid.measure()).sqrt()
    }

    /// Pointwise Fourier multiplier. The flag survives when `m(-xi) = conj(m(xi))`, which
    /// the caller asserts through `preserves_realness`.
    pub fn apply_multiplier(&self, preserves_realness: bool, m: impl Fn(T) -> Cplx<T>) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| c * m(self.grid.xi(i))).collect();
        Self { grid: self.grid, coeffs, real: self.real && preserves_realness }
    }

    pub fn apply_real_multiplier(&self, m: impl Fn(T) -> T) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| c * m(self.grid.xi(i))).collect();
        Self { grid: self.grid, coeffs, real: self.real }
    }

    /// `d/dx`, multiplier `i xi`.
    pub fn derivative(&self) -> Self {
        self.apply_multiplier(true, |xi| Cplx::new(T::zero(), xi))
    }

    pub fn scale(&self, a: T) -> Self {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|&c| c * a).collect(), real: self.real }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Cplx<T>, Cplx<T>) -> Cplx<T>) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, coeffs, real: self.real && other.real })
    }

    /// Dyadic range of the frequency variable on this grid.
    pub fn dyadic_range(&self) -> DyadicRange {
        frequency_range(&self.grid)
    }

    /// `P_N u`.
    pub fn project(&self, n: DyadicIndex) -> Result<Self> {
        let range = self.dyadic_range();
        range.check(n, "frequency")?;
        Ok(self.apply_real_multiplier(|xi| range.multiplier(n, xi)))
    }

    /// Grouped projection such as `P_{<~N}` or `P_{>>N}`.
    pub fn project_range(&self, sel: BlockSelector) -> Result<Self> {
        let range = self.dyadic_range();
        match sel {
            BlockSelector::Above(_) => {}
            BlockSelector::AtMost(n) | BlockSelector::Near(n) | BlockSelector::Exactly(n) => {
                if n > range.hi {
                    range.check(n, "frequency")?;
                }
            }
        }
        Ok(self.apply_real_multiplier(|xi| sel.multiplier(&range, xi)))
    }
}

pub fn frequency_range<T: Real>(grid: &FrequencyGrid<T>) -> DyadicRange {
    DyadicRange::covering(grid.spacing().to_f64_lossy(), grid.nyquist().to_f64_lossy())
}

/// Physical `L^2` norm `sqrt(sum |u_j|^2 dx)`.
pub fn physical_l2<T: Real>(grid: &FrequencyGrid<T>, samples: &[Cplx<T>]) -> T {
    (samples.iter().fold(T::zero(), |a, c| a + c.norm_sqr()) * grid.dx()).sqrt()
}

/// Dealiased (3/2-rule) pseudospectral product of two fields.
///
/// Both factors are zero padded to `3n/2` modes, multiplied in physical space and
/// truncated back, which reproduces the exact truncated convolution.
pub fn dealiased_product<T: Real>(a: &SpectralField<T>, b: &SpectralField<T>) -> Result<SpectralField<T>> {
    if a.grid() != b.grid() {
        return Err(Error::InvalidArgument("fields live on different grids".into()));
    }
    let ctx = ProductWorkspace::new(*a.grid());
    let pa = ctx.to_padded_physical(a.coeffs());
    let pb = ctx.to_padded_physical(b.coeffs());
    let prod: Vec<Cplx<T>> = pa.iter().zip(&pb).map(|(&x, &y)| x * y).collect();
    let coeffs = ctx.from_padded_physical(prod);
    SpectralField::from_coeffs(*a.grid(), coeffs, a.is_real() && b.is_real())
}

/// Plans and scratch for repeated 3/2-padded products on one grid.
#[derive(Clone)]
pub struct ProductWorkspace<T: Real> {
    grid: FrequencyGrid<T>,
    padded: FftPair<T>,
}

impl<T: Real> ProductWorkspace<T> {
    pub fn new(grid: FrequencyGrid<T>) -> Self {
        let np = grid.n_modes() * 3 / 2;
        Self { grid, padded: FftPair::new(np) }
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn padded_len(&self) -> usize {
        self.padded.len()
    }

    /// Physical samples on the padded grid (the phase convention is irrelevant for
    /// pointwise products as long as the round trip is consistent).
    pub fn to_padded_physical(&self, coeffs: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let n = self.grid.n_modes();
        let np = self.padded.len();
        let mut buf = vec![Cplx::zero(); np];
        for (i, &c) in coeffs.iter().enumerate() {
            let m = self.grid.wavenumber(i);
            // drop the unpaired Nyquist slot so real fields stay real
            if m == -(n as i64) / 2 {
                continue;
            }
            let j = if m >= 0 { m as usize } else { (m + np as i64) as usize };
            buf[j] = c;
        }
        self.padded.inverse(&mut buf);
        let scale = (self.grid.half_length() + self.grid.half_length()).recip();
        for c in &mut buf {
            *c = *c * scale;
        }
        buf
    }

    /// Inverse of [`Self::to_padded_physical`] followed by truncation to the grid.
    pub fn from_padded_physical(&self, mut buf: Vec<Cplx<T>>) -> Vec<Cplx<T>> {
        let n = self.grid.n_modes();
        let np = self.padded.len();
        self.padded.forward(&mut buf);
        let dxp = (self.grid.half_length() + self.grid.half_length()) / T::from_usize_lossy(np);
        let mut out = vec![Cplx::zero(); n];
        for (i, o) in out.iter_mut().enumerate() {
            let m = self.grid.wavenumber(i);
            if m == -(n as i64) / 2 {
                continue;
            }
            let j = if m >= 0 { m as usize } else { (m + np as i64) as usize };
            *o = buf[j] * dxp;
        }
        out
    }

    /// Coefficients of `d/dx (a b)` scaled by `factor`.
    pub fn derivative_of_product(&self, a: &[Cplx<T>], b: &[Cplx<T>], factor: T) -> Vec<Cplx<T>> {
        let pa = self.to_padded_physical(a);
        let pb = self.to_padded_physical(b);
        let prod: Vec<Cplx<T>> = pa.iter().zip(&pb).map(|(&x, &y)| x * y).collect();
        let mut out = self.from_padded_physical(prod);
        for (i, c) in out.iter_mut().enumerate() {
            let xi = self.grid.xi(i);
            *c = Cplx::new(-c.im * xi, c.re * xi) * factor;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> FrequencyGrid<f64> {
        FrequencyGrid::new(PI, 16).unwrap()
    }

    #[test]
    fn cosine_is_two_modes() {
        let g = grid();
        let samples: Vec<f64> = g.points().iter().map(|x| x.cos()).collect();
        let f = SpectralField::from_physical(g, &samples).unwrap();
        // continuum normalisation: u_hat(+-1) = L_x, i.e. 1/2 after dividing by 2 L_x
        let norm = 2.0 * g.half_length();
        assert!((f.coeff_at(1).unwrap() / norm - 0.5).norm() < 1e-14);
        assert!((f.coeff_at(-1).unwrap() / norm - 0.5).norm() < 1e-14);
        for m in -8i64..8 {
            if m.abs() != 1 {
                assert!(f.coeff_at(m).unwrap().norm() < 1e-13);
            }
        }
    }

    #[test]
    fn roundtrip_and_plancherel() {
        let g = FrequencyGrid::<f64>::new(5.0, 64).unwrap();
        let samples: Vec<f64> = g.points().iter().map(|&x: &f64| (-x * x).exp() * (3.0 * x).sin() + 0.1 * x.cos()).collect();
        let f = SpectralField::from_physical(g, &samples).unwrap();
        let back = f.to_physical();
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let phys: Vec<_> = samples.iter().map(|&v| Cplx::new(v, 0.0)).collect();
        let l2p = physical_l2(&g, &phys);
        assert!((l2p - f.l2_norm()).abs() < 1e-10 * l2p);
        assert!(f.hermitian_defect() < 1e-12);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let g = grid();
        assert!(matches!(
            SpectralField::from_physical(g, &[0.0; 15]),
            Err(Error::SizeMismatch { expected: 16, got: 15 })
        ));
    }

    #[test]
    fn dealiased_product_matches_direct_convolution() {
        let g = FrequencyGrid::new(PI, 32).unwrap();
        // band-limited to |m| < 8 = n/4
        let a = SpectralField::from_fn(g, false, |xi| {
            if xi.abs() < 8.0 { Cplx::new((0.3 * xi).cos(), 0.2 * xi) } else { Cplx::zero() }
        });
        let b = SpectralField::from_fn(g, false, |xi| {
            if xi.abs() < 8.0 { Cplx::new(1.0 / (1.0 + xi * xi), (0.7 * xi).sin()) } else { Cplx::zero() }
        });
        let p = dealiased_product(&a, &b).unwrap();
        let meas = g.measure();
        for m in -16i64..16 {
            let mut acc = Cplx::zero();
            for m1 in -16i64..16 {
                if let (Some(x), Some(y)) = (a.coeff_at(m1), b.coeff_at(m - m1)) {
                    acc += x * y;
                }
            }
            acc *= meas;
            assert!((acc - p.coeff_at(m).unwrap()).norm() < 1e-12, "m={m}");
        }
    }
}
