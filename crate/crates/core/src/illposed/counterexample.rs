use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Cplx;
use crate::spectral::dyadic::DyadicIndex;
use crate::spectral::field::SpectralField;
use crate::spectral::grid::FrequencyGrid;

/// Width of the frequency interval `I_N = [N, N + 2]` carrying the counterexample data.
pub const INTERVAL_WIDTH: f64 = 2.0;

/// Half-width of the low-frequency band where the quadratic interaction is observed.
pub const OBSERVATION_BAND: f64 = 0.5;

/// Amplitude of the indicator data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeConvention {
    /// `a = N`: `||phi_N||_{H^-1} ~ 1`, `||phi_N||_{H^s} ~ N^{1+s}`.
    #[default]
    Corrected,
    /// `a = 1 / N`, as printed with the definition of the data. Inconsistent with the
    /// `H^-1` normalisation; kept for comparison.
    Literal,
}

impl AmplitudeConvention {
    pub fn amplitude(self, n: f64) -> f64 {
        match self {
            AmplitudeConvention::Corrected => n,
            AmplitudeConvention::Literal => 1.0 / n,
        }
    }
}

/// Parameters of one counterexample datum `eps phi_N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub block: DyadicIndex,
    pub convention: AmplitudeConvention,
    /// Target Sobolev exponent, below -1.
    pub s: f64,
    /// Observation time in `(0, 1)`.
    pub t: f64,
    pub eps: f64,
}

impl CounterexampleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.s < -1.0) {
            return Err(Error::InvalidArgument(format!("the counterexample needs s < -1, got {}", self.s)));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::InvalidArgument(format!("observation time must lie in (0, 1), got {}", self.t)));
        }
        Ok(())
    }
}

/// Checks that `I_N` and the observation band fit on the grid.
pub fn check_fits(grid: &FrequencyGrid<f64>, n: f64) -> Result<()> {
    if !(grid.nyquist() > n + INTERVAL_WIDTH) {
        return Err(Error::resolution(
            format!("Nyquist frequency {} does not exceed N + 2 = {}", grid.nyquist(), n + INTERVAL_WIDTH),
            "increase n_modes",
        ));
    }
    if grid.spacing() > OBSERVATION_BAND {
        return Err(Error::resolution(
            format!("frequency spacing {} leaves the band |xi| <= 1/2 unresolved", grid.spacing()),
            "increase half_length",
        ));
    }
    Ok(())
}

/// `phi_N` with `phi_hat = a (chi_{I_N}(xi) + chi_{I_N}(-xi))`.
///
/// Interval endpoints that fall on grid nodes get amplitude `a / sqrt 2`, so the discrete
/// `|phi_hat|^2` sum is the trapezoid rule for the interval integral.
pub fn make_phi_n(grid: FrequencyGrid<f64>, block: DyadicIndex, convention: AmplitudeConvention) -> Result<SpectralField<f64>> {
    let n = block.value_f64();
    check_fits(&grid, n)?;
    let a = convention.amplitude(n);
    let tol = 1e-9 * grid.spacing();
    let lo = n;
    let hi = n + INTERVAL_WIDTH;
    Ok(SpectralField::from_fn(grid, true, |xi| {
        let x = xi.abs();
        let v = if (x - lo).abs() <= tol || (x - hi).abs() <= tol {
            a * std::f64::consts::FRAC_1_SQRT_2
        } else if x > lo && x < hi {
            a
        } else {
            0.0
        };
        Cplx::new(v, 0.0)
    }))
}
