use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::duhamel::collocation::{Collocation, StageValues};
use crate::duhamel::solver::{hm1_norm, to_trajectory, SolverConfig};
use crate::duhamel::trajectory::{Provenance, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::field::SpectralField;

/// Size of one Picard coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientNorms {
    pub k: usize,
    /// `sup_t ||A_k(t)||_{H^-1}` over step ends and stages.
    pub sup_hm1: f64,
    pub final_hm1: f64,
}

/// Coefficients `A_k`, `k = 1..=k_max`, of `u(t, eps u0) = sum_k eps^k A_k(t)`.
#[derive(Clone, Debug)]
pub struct PicardSeries<T: Real> {
    pub coefficients: Vec<Trajectory<T>>,
    pub norms: Vec<CoefficientNorms>,
}

impl<T: Real> PicardSeries<T> {
    pub fn k_max(&self) -> usize {
        self.coefficients.len()
    }

    /// `A_k` (1-based).
    pub fn coefficient(&self, k: usize) -> &Trajectory<T> {
        &self.coefficients[k - 1]
    }

    /// `sum_{k <= order} eps^k A_k` at the final time.
    pub fn partial_sum(&self, eps: T, order: usize) -> SpectralField<T> {
        let mut acc = self.coefficients[0].last().scale(T::zero());
        let mut p = T::one();
        for a in self.coefficients.iter().take(order) {
            p = p * eps;
            acc = acc.add(&a.last().scale(p)).expect("same grid");
        }
        acc
    }

    /// Geometric fit `sup_hm1(A_k) ~ C r^k` over `k >= 3`; returns `(C, r)`.
    pub fn geometric_fit(&self) -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .norms
            .iter()
            .filter(|n| n.k >= 3 && n.sup_hm1 > 0.0)
            .map(|n| (n.k as f64, n.sup_hm1.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let (slope, icpt) = crate::fit::linear_fit(&pts);
        Some((icpt.exp(), slope.exp()))
    }

    /// `sum_{3 <= k <= k_max} eps^k sup ||A_k||_{H^-1}` plus the geometric remainder beyond
    /// `k_max`. Fails when the coefficients do not decay geometrically at this `eps`.
    pub fn tail_bound(&self, eps: f64) -> Result<f64> {
        let explicit: f64 = self.norms.iter().filter(|n| n.k >= 3).map(|n| eps.powi(n.k as i32) * n.sup_hm1).sum();
        let Some((c, r)) = self.geometric_fit() else {
            return Ok(explicit);
        };
        let q = eps * r;
        if !(q < 1.0) {
            return Err(Error::NonGeometricTail(format!("eps * growth = {q:.3} >= 1")));
        }
        let k1 = self.k_max() as i32 + 1;
        Ok(explicit + c * q.powi(k1) / (1.0 - q))
    }
}

/// Picard coefficients of the discrete Duhamel map on `[0, cfg.horizon]`.
///
/// `A_1 = S(t) u0` and `A_k = D[-1/2 d/dx sum_{i+j=k} A_i A_j]` with `D` the same discrete
/// operator the solver iterates, so `sum eps^k A_k` reproduces the solver output up to the
/// truncation of the series.
pub fn picard_coefficients<T: Real>(u0: &SpectralField<T>, k_max: usize, cfg: &SolverConfig) -> Result<PicardSeries<T>> {
    cfg.validate()?;
    if k_max < 2 {
        return Err(Error::InvalidArgument(format!("k_max must be at least 2, got {k_max}")));
    }
    let col = cfg.integrator(*u0.grid(), cfg.horizon)?;
    picard_with(&col, u0, k_max, cfg)
}

pub(crate) fn picard_with<T: Real>(col: &Collocation<T>, u0: &SpectralField<T>, k_max: usize, cfg: &SolverConfig) -> Result<PicardSeries<T>> {
    let grid = *u0.grid();
    let products = col.products();
    let n_stage = col.n_steps() * col.n_stages();
    // padded physical stage values of A_1..A_{k-1}
    let mut physical: Vec<Vec<Vec<Cplx<T>>>> = Vec::with_capacity(k_max);
    let mut coefficients = Vec::with_capacity(k_max);
    let mut norms = Vec::with_capacity(k_max);
    let real = u0.is_real();
    let half = -T::lit(0.5);
    for k in 1..=k_max {
        let values: StageValues<T> = if k == 1 {
            col.linear(u0.coeffs())
        } else {
            let forcing: Vec<Vec<Cplx<T>>> = (0..n_stage)
                .map(|st| {
                    let np = products.padded_len();
                    let mut acc = vec![Cplx::zero(); np];
                    for i in 1..=k / 2 {
                        let j = k - i;
                        let w = if i == j { T::one() } else { T::lit(2.0) };
                        let (pi, pj) = (&physical[i - 1][st], &physical[j - 1][st]);
                        for (a, (&x, &y)) in acc.iter_mut().zip(pi.iter().zip(pj)) {
                            *a = *a + x * y * w;
                        }
                    }
                    let mut f = products.from_padded_physical(acc);
                    for (m, c) in f.iter_mut().enumerate() {
                        let xi = grid.xi(m);
                        *c = Cplx::new(-c.im * xi, c.re * xi) * half;
                    }
                    f
                })
                .collect();
            col.sweep(None, &forcing)
        };
        if k < k_max {
            physical.push(
                values
                    .stages
                    .iter()
                    .map(|c| products.to_padded_physical(c))
                    .collect(),
            );
        }
        let sup = values
            .ends
            .iter()
            .chain(values.stages.iter())
            .map(|c| hm1_norm(&grid, c))
            .fold(T::zero(), T::max)
            .to_f64_lossy();
        let fin = hm1_norm(&grid, values.ends.last().unwrap()).to_f64_lossy();
        norms.push(CoefficientNorms { k, sup_hm1: sup, final_hm1: fin });
        let provenance = if k == 1 { Provenance::Linear } else { Provenance::PicardCoefficient(k) };
        coefficients.push(to_trajectory(col, values, real, cfg.snapshots, T::zero(), provenance)?);
    }
    Ok(PicardSeries { coefficients, norms })
}
