use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Time-step sequence for the nonlinear integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepSchedule {
    Uniform { steps: usize },
    /// Geometric growth `h_min, h_min g, h_min g^2, ...` capped at `h_max`. Resolves the
    /// initial layer `t ~ 1 / xi_max^2` of rough data without paying for it later.
    Graded { h_min: f64, growth: f64, h_max: f64 },
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Uniform { steps: 200 }
    }
}

impl StepSchedule {
    /// Graded schedule adapted to the largest resolved frequency.
    pub fn graded_for(max_frequency: f64, h_max: f64) -> Self {
        let h_min = (0.05 / (max_frequency * max_frequency)).min(h_max);
        StepSchedule::Graded { h_min, growth: 1.1, h_max }
    }

    /// Step sizes covering `[0, length]` exactly.
    pub fn step_sizes<T: Real>(&self, length: T) -> Result<Vec<T>> {
        if !(length > T::zero()) {
            return Err(Error::InvalidArgument(format!("integration length must be positive, got {length}")));
        }
        match *self {
            StepSchedule::Uniform { steps } => {
                if steps == 0 {
                    return Err(Error::InvalidArgument("uniform schedule needs at least one step".into()));
                }
                Ok(vec![length / T::from_usize_lossy(steps); steps])
            }
            StepSchedule::Graded { h_min, growth, h_max } => {
                if !(h_min > 0.0 && h_max >= h_min && growth >= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "graded schedule needs 0 < h_min <= h_max and growth >= 1 (got {h_min}, {h_max}, {growth})"
                    )));
                }
                let total = length.to_f64_lossy();
                let mut out = Vec::new();
                let mut t = 0.0;
                let mut h = h_min;
                while t < total * (1.0 - 1e-12) {
                    let step = h.min(total - t);
                    // avoid a sliver at the end
                    let step = if total - t - step < 0.25 * step { total - t } else { step };
                    out.push(T::lit(step));
                    t += step;
                    h = (h * growth).min(h_max);
                }
                Ok(out)
            }
        }
    }
}
