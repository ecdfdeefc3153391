//! Grids, transforms, smooth cutoffs and Littlewood-Paley projections.

pub mod cutoff;
pub mod dyadic;
pub mod fft;
pub mod field;
pub mod grid;
pub mod spacetime;

use crate::scalar::Real;

/// Japanese bracket `(1 + x^2)^(1/2)`.
pub fn bracket<T: Real>(x: T) -> T {
    x.hypot(T::one())
}
