use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform frequency grid for a periodic box `[-L_x, L_x)` standing in for the real line.
///
/// Coefficients are stored in FFT order: wavenumbers `0, 1, .., n/2-1, -n/2, .., -1`,
/// with frequency `xi_m = m * dxi` and `dxi = pi / L_x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid<T> {
    half_length: T,
    n_modes: usize,
}

impl<T: Real> FrequencyGrid<T> {
    pub fn new(half_length: T, n_modes: usize) -> Result<Self> {
        if !(half_length > T::zero()) || !half_length.is_finite() {
            return Err(Error::InvalidGrid(format!("box half-length must be positive, got {half_length}")));
        }
        if n_modes < 16 || !n_modes.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_modes must be a power of two and at least 16, got {n_modes}"
            )));
        }
        Ok(Self { half_length, n_modes })
    }

    pub fn half_length(&self) -> T {
        self.half_length
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Frequency spacing `pi / L_x`.
    pub fn spacing(&self) -> T {
        T::PI() / self.half_length
    }

    /// Largest representable |xi|, namely `n/2 * dxi`.
    pub fn nyquist(&self) -> T {
        T::from_usize_lossy(self.n_modes / 2) * self.spacing()
    }

    /// Physical sample spacing `2 L_x / n`.
    pub fn dx(&self) -> T {
        (self.half_length + self.half_length) / T::from_usize_lossy(self.n_modes)
    }

    /// Signed wavenumber of storage slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.n_modes as i64;
        let i = idx as i64;
        if i < n / 2 { i } else { i - n }
    }

    /// Storage slot of a signed wavenumber, if it lies on the grid.
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let n = self.n_modes as i64;
        if m < -n / 2 || m >= n / 2 {
            return None;
        }
        Some(if m >= 0 { m as usize } else { (m + n) as usize })
    }

    pub fn xi(&self, idx: usize) -> T {
        T::from_i64(self.wavenumber(idx)).unwrap() * self.spacing()
    }

    pub fn frequencies(&self) -> Vec<T> {
        (0..self.n_modes).map(|i| self.xi(i)).collect()
    }

    /// Physical sample points `x_j = -L_x + j dx`.
    pub fn points(&self) -> Vec<T> {
        let dx = self.dx();
        (0..self.n_modes).map(|j| -self.half_length + T::from_usize_lossy(j) * dx).collect()
    }

    /// Frequency measure `dxi / (2 pi)` making Plancherel exact.
    pub fn measure(&self) -> T {
        self.spacing() / T::TAU()
    }

    /// Same frequency spacing, twice the Nyquist frequency.
    pub fn refined(&self) -> Self {
        Self { half_length: self.half_length, n_modes: 2 * self.n_modes }
    }

    /// Twice the box with the same Nyquist frequency (domain-truncation self-check).
    pub fn doubled_box(&self) -> Self {
        Self { half_length: self.half_length + self.half_length, n_modes: 2 * self.n_modes }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// `[-2T, 2T)`, symmetric about 0 (hosts the support of `eta(t/T)`).
    TwoSided,
    /// `[0, T]`.
    OneSided,
}

/// Uniform time grid. Nodes are `t_j = start + j dt` for `j = 0..=n_steps`; the
/// space-time transform uses the first `n_steps` of them as one period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    horizon: T,
    n_steps: usize,
    window: Window,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(horizon: T, n_steps: usize, window: Window) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!("time horizon must be positive, got {horizon}")));
        }
        if n_steps < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 time steps, got {n_steps}")));
        }
        if window == Window::TwoSided && n_steps % 2 != 0 {
            return Err(Error::InvalidGrid("two-sided windows need an even step count so t = 0 is a node".into()));
        }
        Ok(Self { horizon, n_steps, window })
    }

    pub fn two_sided(horizon: T, n_steps: usize) -> Result<Self> {
        Self::new(horizon, n_steps, Window::TwoSided)
    }

    pub fn one_sided(horizon: T, n_steps: usize) -> Result<Self> {
        Self::new(horizon, n_steps, Window::OneSided)
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn start(&self) -> T {
        match self.window {
            Window::TwoSided => -(self.horizon + self.horizon),
            Window::OneSided => T::zero(),
        }
    }

    pub fn end(&self) -> T {
        match self.window {
            Window::TwoSided => self.horizon + self.horizon,
            Window::OneSided => self.horizon,
        }
    }

    pub fn length(&self) -> T {
        self.end() - self.start()
    }

    pub fn dt(&self) -> T {
        self.length() / T::from_usize_lossy(self.n_steps)
    }

    pub fn node(&self, j: usize) -> T {
        self.start() + T::from_usize_lossy(j) * self.dt()
    }

    /// All `n_steps + 1` nodes including both ends.
    pub fn nodes(&self) -> Vec<T> {
        (0..=self.n_steps).map(|j| self.node(j)).collect()
    }

    /// One period of nodes (`n_steps` values) for the time transform.
    pub fn periodic_nodes(&self) -> Vec<T> {
        (0..self.n_steps).map(|j| self.node(j)).collect()
    }

    /// Index of the node `t = 0`.
    pub fn zero_index(&self) -> usize {
        match self.window {
            Window::TwoSided => self.n_steps / 2,
            Window::OneSided => 0,
        }
    }

    /// Dual (modulation) spacing `2 pi / length`.
    pub fn dsigma(&self) -> T {
        T::TAU() / self.length()
    }

    /// Modulation variable of FFT slot `m`.
    pub fn sigma(&self, m: usize) -> T {
        let n = self.n_steps as i64;
        let i = m as i64;
        let w = if i < (n + 1) / 2 { i } else { i - n };
        T::from_i64(w).unwrap() * self.dsigma()
    }

    pub fn sigma_nyquist(&self) -> T {
        T::from_usize_lossy(self.n_steps / 2) * self.dsigma()
    }

    pub fn refined(&self) -> Self {
        Self { horizon: self.horizon, n_steps: 2 * self.n_steps, window: self.window }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_spacing_grid() {
        let g = FrequencyGrid::<f64>::new(std::f64::consts::PI, 16).unwrap();
        assert!((g.spacing() - 1.0).abs() < 1e-15);
        let mut xs: Vec<i64> = (0..16).map(|i| g.wavenumber(i)).collect();
        xs.sort();
        assert_eq!(xs, (-8..8).collect::<Vec<_>>());
        assert!((g.nyquist() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn half_spacing_grid() {
        let g = FrequencyGrid::<f64>::new(2.0 * std::f64::consts::PI, 64).unwrap();
        assert!((g.spacing() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(FrequencyGrid::<f64>::new(std::f64::consts::PI, 24).is_err());
        assert!(FrequencyGrid::<f64>::new(std::f64::consts::PI, 8).is_err());
        assert!(FrequencyGrid::<f64>::new(0.0, 16).is_err());
        assert!(FrequencyGrid::<f64>::new(-1.0, 16).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let g = FrequencyGrid::<f64>::new(3.0, 32).unwrap();
        for i in 0..32 {
            assert_eq!(g.index_of(g.wavenumber(i)), Some(i));
        }
        assert_eq!(g.index_of(16), None);
        assert_eq!(g.index_of(-16), Some(16));
    }

    #[test]
    fn two_sided_time_grid_is_symmetric() {
        let tg = TimeGrid::<f64>::two_sided(0.5, 64).unwrap();
        assert_eq!(tg.start(), -1.0);
        assert_eq!(tg.end(), 1.0);
        assert_eq!(tg.node(tg.zero_index()), 0.0);
        let nodes = tg.nodes();
        for j in 0..=64 {
            assert!((nodes[j] + nodes[64 - j]).abs() < 1e-15);
        }
        assert!(TimeGrid::<f64>::two_sided(0.5, 63).is_err());
    }
}
