//! Exponential Gauss collocation for `u_t = Lu + F(u)` with `L` the diagonal linear part.
//!
//! On a step `[t_n, t_n + h]` the forcing is replaced by its Lagrange interpolant through
//! the Gauss nodes `c_j` and the linear part is integrated exactly:
//!
//! ```text
//! U_g     = exp(c_g h L) u_n + h sum_j a_gj(hL) F_j
//! u_{n+1} = exp(h L) u_n     + h sum_j b_j(hL) F_j
//! a_gj(z) = int_0^{c_g} exp(z (c_g - s)) l_j(s) ds,   b_j(z) = a_gj with c_g = 1.
//! ```
//!
//! The map from stage forcings to stage values is linear and causal, so the nonlinear
//! solver and the Picard-series recursion share it exactly.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::duhamel::phi::monomial_convolutions;
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::semigroup::LinearKernel;
use crate::spectral::field::ProductWorkspace;
use crate::spectral::grid::FrequencyGrid;

/// Quadratic-product rule used for `d/dx (u^2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[non_exhaustive]
pub enum Dealiasing {
    /// Zero padding to `3n/2` points; exact for quadratic products.
    #[default]
    ThreeHalves,
}

/// Gauss-Legendre node sets on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussNodes<T> {
    nodes: Vec<T>,
    /// `lagrange[j][p]`: coefficient of `s^p` in the `j`-th Lagrange basis polynomial.
    lagrange: Vec<Vec<T>>,
}

impl<T: Real> GaussNodes<T> {
    /// One node (order 2) or two nodes (order 4).
    pub fn new(stages: usize) -> Result<Self> {
        match stages {
            1 => Ok(Self { nodes: vec![T::lit(0.5)], lagrange: vec![vec![T::one()]] }),
            2 => {
                let d = T::lit(3f64.sqrt() / 6.0);
                let c1 = T::lit(0.5) - d;
                let c2 = T::lit(0.5) + d;
                // l_1(s) = (s - c2) / (c1 - c2), l_2(s) = (s - c1) / (c2 - c1)
                let l1 = vec![-c2 / (c1 - c2), T::one() / (c1 - c2)];
                let l2 = vec![-c1 / (c2 - c1), T::one() / (c2 - c1)];
                Ok(Self { nodes: vec![c1, c2], lagrange: vec![l1, l2] })
            }
            _ => Err(Error::InvalidArgument(format!("quadrature supports 1 or 2 Gauss stages, got {stages}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// `int_0^c exp(z (c - s)) l_j(s) ds` for every `j`.
    fn weights(&self, z: Cplx<T>, c: T, out: &mut [Cplx<T>]) {
        let m = monomial_convolutions::<T, 2>(z, c);
        for (j, slot) in out.iter_mut().enumerate() {
            let l = &self.lagrange[j];
            let mut acc = Cplx::zero();
            for (p, &coef) in l.iter().enumerate() {
                acc = acc + m[p] * coef;
            }
            *slot = acc;
        }
    }
}

/// Per-frequency coefficients of one step size, already multiplied by `h`.
struct StepWeights<T> {
    end: Vec<Cplx<T>>,
    stage: Vec<Cplx<T>>,
    a: Vec<Cplx<T>>,
    b: Vec<Cplx<T>>,
}

/// Stage and step-end values of a discrete trajectory.
#[derive(Clone, Debug)]
pub struct StageValues<T> {
    /// `ends[n]`: value at `t_n`, `n = 0..=steps`.
    pub ends: Vec<Vec<Cplx<T>>>,
    /// `stages[n * s + g]`: value at `t_n + c_g h_n`.
    pub stages: Vec<Vec<Cplx<T>>>,
}

/// The discrete Duhamel operator on a fixed step sequence.
pub struct Collocation<T: Real> {
    grid: FrequencyGrid<T>,
    kernel: LinearKernel,
    gauss: GaussNodes<T>,
    steps: Vec<T>,
    times: Vec<T>,
    weights: Vec<Arc<StepWeights<T>>>,
    products: ProductWorkspace<T>,
}

impl<T: Real> Collocation<T> {
    pub fn new(grid: FrequencyGrid<T>, kernel: LinearKernel, stages: usize, steps: Vec<T>) -> Result<Self> {
        let gauss = GaussNodes::new(stages)?;
        if steps.is_empty() || steps.iter().any(|h| !(*h > T::zero())) {
            return Err(Error::InvalidArgument("step sizes must be positive".into()));
        }
        let mut times = Vec::with_capacity(steps.len() + 1);
        let mut t = T::zero();
        times.push(t);
        for &h in &steps {
            t = t + h;
            times.push(t);
        }
        let mut cache: HashMap<u64, Arc<StepWeights<T>>> = HashMap::new();
        let weights = steps
            .iter()
            .map(|&h| {
                cache
                    .entry(h.to_f64_lossy().to_bits())
                    .or_insert_with(|| Arc::new(Self::step_weights(&grid, kernel, &gauss, h)))
                    .clone()
            })
            .collect();
        Ok(Self { grid, kernel, gauss, steps, times, weights, products: ProductWorkspace::new(grid) })
    }

    fn step_weights(grid: &FrequencyGrid<T>, kernel: LinearKernel, gauss: &GaussNodes<T>, h: T) -> StepWeights<T> {
        let n = grid.n_modes();
        let s = gauss.len();
        let mut w = StepWeights {
            end: Vec::with_capacity(n),
            stage: Vec::with_capacity(n * s),
            a: Vec::with_capacity(n * s * s),
            b: Vec::with_capacity(n * s),
        };
        let mut buf = vec![Cplx::zero(); s];
        for k in 0..n {
            let xi = grid.xi(k);
            let z = Cplx::new(-kernel.decay_rate(xi), kernel.phase_rate(xi)) * h;
            w.end.push(z.exp());
            for &c in gauss.nodes() {
                w.stage.push((z * c).exp());
                gauss.weights(z, c, &mut buf);
                w.a.extend(buf.iter().map(|&x| x * h));
            }
            gauss.weights(z, T::one(), &mut buf);
            w.b.extend(buf.iter().map(|&x| x * h));
        }
        w
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn kernel(&self) -> LinearKernel {
        self.kernel
    }

    pub fn n_stages(&self) -> usize {
        self.gauss.len()
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Step-end times `t_0 = 0, ..., t_M`.
    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn stage_times(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.steps.len() * self.n_stages());
        for (n, &h) in self.steps.iter().enumerate() {
            for &c in self.gauss.nodes() {
                out.push(self.times[n] + c * h);
            }
        }
        out
    }

    pub fn products(&self) -> &ProductWorkspace<T> {
        &self.products
    }

    /// Exact free evolution `exp(tL) u0` at every stage and step end.
    pub fn linear(&self, u0: &[Cplx<T>]) -> StageValues<T> {
        let evolve = |t: T| -> Vec<Cplx<T>> {
            u0.iter().enumerate().map(|(k, &c)| c * self.kernel.evolve(self.grid.xi(k), t)).collect()
        };
        StageValues {
            ends: self.times.iter().map(|&t| evolve(t)).collect(),
            stages: self.stage_times().into_iter().map(evolve).collect(),
        }
    }

    /// Applies the discrete Duhamel map to stage forcings, starting from `u0` (or zero).
    pub fn sweep(&self, u0: Option<&[Cplx<T>]>, forcing: &[Vec<Cplx<T>>]) -> StageValues<T> {
        let n = self.grid.n_modes();
        let s = self.n_stages();
        assert_eq!(forcing.len(), self.steps.len() * s, "one forcing per stage");
        let mut u: Vec<Cplx<T>> = u0.map(|v| v.to_vec()).unwrap_or_else(|| vec![Cplx::zero(); n]);
        let mut ends = Vec::with_capacity(self.steps.len() + 1);
        let mut stages = vec![vec![Cplx::zero(); n]; self.steps.len() * s];
        ends.push(u.clone());
        for step in 0..self.steps.len() {
            let w = &self.weights[step];
            let f = &forcing[step * s..(step + 1) * s];
            let mut next = vec![Cplx::zero(); n];
            for k in 0..n {
                let uk = u[k];
                let mut acc_end = w.end[k] * uk;
                for j in 0..s {
                    acc_end = acc_end + w.b[k * s + j] * f[j][k];
                }
                next[k] = acc_end;
                for g in 0..s {
                    let mut acc = w.stage[k * s + g] * uk;
                    for j in 0..s {
                        acc = acc + w.a[(k * s + g) * s + j] * f[j][k];
                    }
                    stages[step * s + g][k] = acc;
                }
            }
            u = next;
            ends.push(u.clone());
        }
        StageValues { ends, stages }
    }

    /// `-1/2 d/dx (u^2)` at every stage.
    pub fn nonlinearity(&self, values: &StageValues<T>) -> Vec<Vec<Cplx<T>>> {
        let half = -T::lit(0.5);
        values.stages.iter().map(|u| self.products.derivative_of_product(u, u, half)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duhamel::phi::phi1;

    fn grid() -> FrequencyGrid<f64> {
        FrequencyGrid::new(std::f64::consts::PI, 16).unwrap()
    }

    #[test]
    fn constant_forcing_is_integrated_exactly() {
        let g = grid();
        let col = Collocation::new(g, LinearKernel::KdvBurgers, 2, vec![0.01; 37]).unwrap();
        let f: Vec<Cplx<f64>> = (0..16).map(|k| Cplx::new(1.0 / (1.0 + k as f64), 0.3)).collect();
        let forcing = vec![f.clone(); 37 * 2];
        let out = col.sweep(None, &forcing);
        let t = col.times()[37];
        for k in 0..16 {
            let xi = g.xi(k);
            let lam = Cplx::new(-xi * xi, xi * xi * xi);
            let exact = phi1(lam * t) * t * f[k];
            assert!((out.ends[37][k] - exact).norm() < 1e-12 * (1.0 + exact.norm()), "k={k}");
        }
    }

    #[test]
    fn linear_part_matches_sweep_without_forcing() {
        let g = grid();
        let col = Collocation::new(g, LinearKernel::KdvBurgers, 2, vec![0.02; 10]).unwrap();
        let u0: Vec<Cplx<f64>> = (0..16).map(|k| Cplx::new((k as f64).sin(), 0.1)).collect();
        let a = col.linear(&u0);
        let b = col.sweep(Some(&u0), &vec![vec![Cplx::zero(); 16]; 20]);
        for (x, y) in a.stages.iter().flatten().zip(b.stages.iter().flatten()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn polynomial_forcing_order() {
        // smooth forcing on a single mode: the global error should drop ~16x per halving
        let g = grid();
        let k = g.index_of(1).unwrap();
        let err = |steps: usize| {
            let col = Collocation::new(g, LinearKernel::KdvBurgers, 2, vec![1.0 / steps as f64; steps]).unwrap();
            let forcing: Vec<Vec<Cplx<f64>>> = col
                .stage_times()
                .iter()
                .map(|&t| {
                    let mut v = vec![Cplx::zero(); 16];
                    v[k] = Cplx::new((3.0 * t).cos(), 0.0);
                    v
                })
                .collect();
            let out = col.sweep(None, &forcing);
            // exact: int_0^1 e^{lam(1-s)} cos(3s) ds with lam = i - 1
            let lam = Cplx::new(-1.0, 1.0);
            let i3 = Cplx::new(0.0, 3.0);
            let part = |w: Cplx<f64>| ((w).exp() - lam.exp()) / (w - lam);
            let exact = (part(i3) + part(-i3)) * 0.5;
            (out.ends[steps][k] - exact).norm()
        };
        let e1 = err(8);
        let e2 = err(16);
        assert!((e1 / e2).log2() > 3.7, "order {}", (e1 / e2).log2());
    }
}
