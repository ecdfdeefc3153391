//! Spectral laboratory for the KdV-Burgers equation
//! `u_t + u_xxx - u_xx + u u_x = 0` on the line, modelled by a large periodic box.
//!
//! The numerical core is generic over the real scalar ([`Real`], implemented for `f32`
//! and `f64`); the aliases at the crate root fix `f64`, which is what the experiments use.

pub mod duhamel;
pub mod error;
pub mod fit;
pub mod illposed;
pub mod io;
pub mod norms;
pub mod scalar;
pub mod semigroup;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};
pub use spectral::bracket;
pub use spectral::dyadic::{BlockSelector, DyadicIndex, DyadicRange};
pub use spectral::grid::Window;

pub type FrequencyGrid = spectral::grid::FrequencyGrid<f64>;
pub type TimeGrid = spectral::grid::TimeGrid<f64>;
pub type SpectralField = spectral::field::SpectralField<f64>;
pub type SpaceTimeField = spectral::spacetime::SpaceTimeField<f64>;
