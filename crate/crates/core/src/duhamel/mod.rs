//! Duhamel operators and the nonlinear flow.

pub mod collocation;
pub mod explicit;
pub mod extended;
pub mod phi;
pub mod picard;
pub mod schedule;
pub mod solver;
pub mod trajectory;

pub use collocation::Dealiasing;
pub use explicit::a2_explicit;
pub use extended::{duhamel_integral, extended_duhamel, forced_response, windowed_fixed_point};
pub use picard::{picard_coefficients, PicardSeries};
pub use schedule::StepSchedule;
pub use solver::{continue_globally, solve, Solution, SolverConfig};
pub use trajectory::{Provenance, Trajectory};
