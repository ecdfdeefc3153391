//! Counterexample data below `H^-1`: the interaction geometry, the growth of the second
//! Picard coefficient and the resulting discontinuity of the flow map.

pub mod counterexample;
pub mod discontinuity;
pub mod geometry;
pub mod inflation;

pub use counterexample::{make_phi_n, AmplitudeConvention, CounterexampleSpec};
pub use discontinuity::{flow_discontinuity_experiment, DiscontinuityConfig, DiscontinuityReport, FlowRow, ScaleRow};
pub use geometry::{k_xi_set, real_part_check, resonance_constants, InteractionSet, RealPartCheck, ResonanceConstants};
pub use inflation::{a2_inflation_experiment, quadrature_refinement, InflationConfig, InflationRow, InflationTable};
