//! Linear Duhamel operators on given forcings, and the extended operator on two-sided
//! time windows.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::duhamel::phi::phi_functions;
use crate::duhamel::solver::IterationRecord;
use crate::duhamel::trajectory::{Provenance, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::semigroup::{w_propagate, LinearKernel};
use crate::spectral::cutoff::{eta, eta_prime, eta_scaled};
use crate::spectral::field::{ProductWorkspace, SpectralField};
use crate::spectral::grid::{TimeGrid, Window};
use crate::spectral::spacetime::SpaceTimeField;

/// Weights of `int_0^h exp(z (h - s)/h) f(s) ds / h` for `f` linear between the endpoint
/// values: `(w_start, w_end) = (phi_1 - phi_2, phi_2)(z)`.
fn trapezoid_weights<T: Real>(z: Cplx<T>) -> (Cplx<T>, Cplx<T>, Cplx<T>) {
    let f = phi_functions::<T, 3>(z);
    (f[0], f[1] - f[2], f[2])
}

/// `int_{t_0}^{t} S(t - s) f(s) ds` at every node of the forcing, exponential trapezoid
/// rule (exact propagator, forcing linear between nodes).
pub fn forced_response<T: Real>(f: &Trajectory<T>, kernel: LinearKernel) -> Result<Trajectory<T>> {
    let grid = *f.grid();
    let n = grid.n_modes();
    let times = f.times();
    let mut acc = vec![Cplx::zero(); n];
    let mut out = Vec::with_capacity(times.len());
    out.push(SpectralField::from_coeffs(grid, acc.clone(), f.is_real())?);
    for i in 0..times.len() - 1 {
        let h = times[i + 1] - times[i];
        let (fa, fb) = (f.snapshots()[i].coeffs(), f.snapshots()[i + 1].coeffs());
        for k in 0..n {
            let xi = grid.xi(k);
            let z = Cplx::new(-kernel.decay_rate(xi), kernel.phase_rate(xi)) * h;
            let (e, wa, wb) = trapezoid_weights(z);
            acc[k] = e * acc[k] + (wa * fa[k] + wb * fb[k]) * h;
        }
        out.push(SpectralField::from_coeffs(grid, acc.clone(), f.is_real())?);
    }
    Trajectory::new(times.to_vec(), out, Provenance::Operator)
}

/// `-1/2 int_0^t S(t - s) d/dx (u(s)^2) ds` from the snapshots of `u`.
///
/// The nonlinearity is formed pseudospectrally (3/2-rule) at every snapshot and integrated
/// with the exponential trapezoid rule; between nodes it is interpolated linearly, so `t`
/// may fall anywhere in the trajectory window.
pub fn duhamel_integral<T: Real>(u: &Trajectory<T>, t: T) -> Result<SpectralField<T>> {
    if t < u.start() || t > u.end() {
        return Err(u.out_of_range(t));
    }
    let grid = *u.grid();
    let ws = ProductWorkspace::new(grid);
    let half = -T::lit(0.5);
    let last = u.times().iter().rposition(|&s| s <= t).unwrap();
    let upto = last.min(u.len() - 1);
    let forcing: Vec<SpectralField<T>> = u.snapshots()[..=(upto + 1).min(u.len() - 1)]
        .iter()
        .map(|s| SpectralField::from_coeffs(grid, ws.derivative_of_product(s.coeffs(), s.coeffs(), half), s.is_real()))
        .collect::<Result<_>>()?;
    let times = &u.times()[..forcing.len()];
    let head = Trajectory::new(times[..=upto].to_vec(), forcing[..=upto].to_vec(), Provenance::Operator)?;
    let base = forced_response(&head, LinearKernel::KdvBurgers)?;
    let mut acc = base.last().clone();
    let rem = t - times[upto];
    if rem > T::zero() {
        // partial step with the forcing interpolated between the bracketing nodes
        let h_full = times[upto + 1] - times[upto];
        let theta = rem / h_full;
        let fa = forcing[upto].coeffs();
        let fb = forcing[upto + 1].coeffs();
        let coeffs = acc
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let xi = grid.xi(k);
                let z = Cplx::new(-xi * xi, xi * xi * xi) * rem;
                let (e, wa, wb) = trapezoid_weights(z);
                let f_end = fa[k] * (T::one() - theta) + fb[k] * theta;
                e * a + (wa * fa[k] + wb * f_end) * rem
            })
            .collect();
        acc = SpectralField::from_coeffs(grid, coeffs, u.is_real())?;
    }
    Ok(acc)
}

/// Extended Duhamel operator on a symmetric two-sided window:
///
/// ```text
/// Lf(t) = eta(t) int_0^t W(t - s, t - s) f(s) ds    for t >= 0
/// Lf(t) = eta(t) int_0^t W(t - s, t + s) f(s) ds    for t < 0
/// ```
///
/// Both branches use the exponential trapezoid rule. On the negative side the integral is
/// accumulated from `0` backwards through `J(t) = int_t^0 W(t - s, t + s) f(s) ds`,
/// `Lf = -eta J`, with all exponentials of nonpositive real part.
pub fn extended_duhamel<T: Real>(f: &Trajectory<T>) -> Result<Trajectory<T>> {
    let (pos, neg) = extended_branches(f)?;
    let tgrid = *f.tgrid().unwrap();
    let snaps = pos
        .into_iter()
        .zip(neg)
        .zip(tgrid.nodes())
        .map(|((p, q), t)| {
            let w = eta(t);
            if t >= T::zero() { p.scale(w) } else { q.scale(-w) }
        })
        .collect();
    Trajectory::on_time_grid(tgrid, snaps, Provenance::Operator)
}

/// Unwindowed branches `(K, J)`: `K(t) = int_0^t S(t - s) f(s) ds` for `t >= 0` and
/// `J(t) = int_t^0 W(t - s, t + s) f(s) ds` for `t < 0`; zero on the other side.
fn extended_branches<T: Real>(f: &Trajectory<T>) -> Result<(Vec<SpectralField<T>>, Vec<SpectralField<T>>)> {
    let tgrid = match f.tgrid() {
        Some(g) if g.window() == Window::TwoSided => *g,
        _ => return Err(Error::OneSidedGrid),
    };
    let grid = *f.grid();
    let n = grid.n_modes();
    let nodes = tgrid.nodes();
    let zero = tgrid.zero_index();
    let h = tgrid.dt();
    let real = f.is_real();
    let snaps = f.snapshots();
    let empty = SpectralField::zeros(grid);
    let mut pos = vec![empty.clone(); nodes.len()];
    let mut neg = vec![empty; nodes.len()];
    // forward branch
    let mut acc = vec![Cplx::zero(); n];
    for j in zero..nodes.len() - 1 {
        let (fa, fb) = (snaps[j].coeffs(), snaps[j + 1].coeffs());
        for k in 0..n {
            let xi = grid.xi(k);
            let z = Cplx::new(-xi * xi, xi * xi * xi) * h;
            let (e, wa, wb) = trapezoid_weights(z);
            acc[k] = e * acc[k] + (wa * fa[k] + wb * fb[k]) * h;
        }
        pos[j + 1] = SpectralField::from_coeffs(grid, acc.clone(), real)?;
    }
    // backward branch: J(t_j) = exp(-h(i xi^3 + xi^2)) J(t_{j+1})
    //   + exp((t_j + t_{j+1}) xi^2 - i h xi^3) h [phi_2(z) f_{j+1} + (phi_1 - phi_2)(z) f_j],
    // z = -h (xi^2 - i xi^3) after reversing the integration variable
    let mut acc = vec![Cplx::zero(); n];
    for j in (0..zero).rev() {
        let (fa, fb) = (snaps[j].coeffs(), snaps[j + 1].coeffs());
        let tsum = nodes[j] + nodes[j + 1];
        for k in 0..n {
            let xi = grid.xi(k);
            let xi2 = xi * xi;
            let xi3 = xi2 * xi;
            let carry = Cplx::from_polar((-h * xi2).exp(), -h * xi3);
            let z = Cplx::new(-h * xi2, h * xi3);
            let f = phi_functions::<T, 3>(z);
            let front = Cplx::from_polar((tsum * xi2).exp(), -h * xi3);
            acc[k] = carry * acc[k] + front * (f[2] * fb[k] + (f[1] - f[2]) * fa[k]) * h;
        }
        neg[j] = SpectralField::from_coeffs(grid, acc.clone(), real)?;
    }
    Ok((pos, neg))
}

/// [`extended_duhamel`] on a space-time field sampled on its periodic nodes.
pub fn extended_duhamel_spacetime<T: Real>(f: &SpaceTimeField<T>) -> Result<SpaceTimeField<T>> {
    let tgrid = *f.tgrid();
    let mut slices = f.slice_fields();
    slices.push(slices[0].clone());
    let traj = Trajectory::on_time_grid(tgrid, slices, Provenance::Operator)?;
    let out = extended_duhamel(&traj)?;
    let mut snaps = out.into_snapshots();
    snaps.pop();
    SpaceTimeField::from_time_slices(tgrid, *f.xgrid(), &snaps.into_iter().map(|s| s.into_coeffs()).collect::<Vec<_>>(), f.is_real())
}

/// Residuals of the forced equation satisfied by the negative-time branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcedResidual {
    /// Relative residual with the boundary term `W(0, 2t) f(t)`.
    pub corrected: f64,
    /// Relative residual with the boundary term `W(2t, 0) f(t)`.
    pub literal: f64,
}

/// Checks `(d_t + d_xxx - d_xx + I) w = -2 d_xx w + eta W(0, 2t) f + (eta' + eta) int_0^t W(t - s, t + s) f ds`
/// for `w = chi_{t<0} Lf` at interior negative nodes, with central differences in `t` and
/// exact multipliers in `xi`.
pub fn negative_branch_residual<T: Real>(f: &Trajectory<T>) -> Result<ForcedResidual> {
    let (_, neg) = extended_branches(f)?;
    let tgrid = *f.tgrid().unwrap();
    let grid = *f.grid();
    let nodes = tgrid.nodes();
    let h = tgrid.dt();
    let zero = tgrid.zero_index();
    let mut worst_c = T::zero();
    let mut worst_l = T::zero();
    let mut scale = T::zero();
    let w_at = |j: usize| neg[j].scale(-eta(nodes[j]));
    for j in 1..zero.saturating_sub(1) {
        let t = nodes[j];
        let wm = w_at(j - 1);
        let w0 = w_at(j);
        let wp = w_at(j + 1);
        // int_0^t W f ds = -J(t)
        let integral = neg[j].scale(-T::one());
        let ft = &f.snapshots()[j];
        let lhs: Vec<Cplx<T>> = (0..grid.n_modes())
            .map(|k| {
                let xi = grid.xi(k);
                let dt = (wp.coeffs()[k] - wm.coeffs()[k]) / (h + h);
                dt + w0.coeffs()[k] * Cplx::new(xi * xi + T::one(), -xi * xi * xi)
            })
            .collect();
        let common: Vec<Cplx<T>> = (0..grid.n_modes())
            .map(|k| {
                let xi = grid.xi(k);
                w0.coeffs()[k] * (T::lit(2.0) * xi * xi) + integral.coeffs()[k] * (eta_prime(t) + eta(t))
            })
            .collect();
        let corrected = w_propagate(ft, T::zero(), t + t).scale(eta(t));
        let literal = w_propagate(ft, t + t, T::zero()).scale(eta(t));
        let res = |b: &SpectralField<T>| {
            let d: Vec<Cplx<T>> = (0..grid.n_modes()).map(|k| lhs[k] - common[k] - b.coeffs()[k]).collect();
            SpectralField::from_coeffs(grid, d, false).unwrap().l2_norm()
        };
        worst_c = worst_c.max(res(&corrected));
        worst_l = worst_l.max(res(&literal));
        scale = scale.max(SpectralField::from_coeffs(grid, lhs, false)?.l2_norm());
    }
    if scale == T::zero() {
        return Ok(ForcedResidual { corrected: 0.0, literal: 0.0 });
    }
    Ok(ForcedResidual { corrected: (worst_c / scale).to_f64_lossy(), literal: (worst_l / scale).to_f64_lossy() })
}

/// Fixed point of `u -> eta(t) W(t) phi - 1/2 L d/dx (eta_T u)^2` on a two-sided grid.
///
/// `W(t) = W(t, t)`. Returns the trajectory on all nodes of `tgrid` and the iteration log.
pub fn windowed_fixed_point<T: Real>(
    phi: &SpectralField<T>,
    cutoff_time: T,
    tgrid: TimeGrid<T>,
    max_iterations: usize,
    tolerance: f64,
) -> Result<(Trajectory<T>, Vec<IterationRecord>)> {
    if tgrid.window() != Window::TwoSided {
        return Err(Error::OneSidedGrid);
    }
    let grid = *phi.grid();
    let ws = ProductWorkspace::new(grid);
    let free = Trajectory::sample(tgrid, Provenance::Linear, |t| w_propagate(phi, t, t).scale(eta(t)))?;
    let mut u = free.clone();
    let mut log = Vec::new();
    let mut prev: Option<f64> = None;
    let half = -T::lit(0.5);
    for iter in 1..=max_iterations {
        let forcing = Trajectory::on_time_grid(
            tgrid,
            u.snapshots()
                .iter()
                .zip(tgrid.nodes())
                .map(|(s, t)| {
                    let v = s.scale(eta_scaled(t, cutoff_time));
                    SpectralField::from_coeffs(grid, ws.derivative_of_product(v.coeffs(), v.coeffs(), half), s.is_real()).unwrap()
                })
                .collect(),
            Provenance::Operator,
        )?;
        let duh = extended_duhamel(&forcing)?;
        let next: Vec<SpectralField<T>> = free
            .snapshots()
            .iter()
            .zip(duh.snapshots())
            .map(|(a, b)| a.add(b).unwrap())
            .collect();
        let mut diff = T::zero();
        let mut size = T::zero();
        for (a, b) in next.iter().zip(u.snapshots()) {
            diff = diff.max(a.sub(b)?.l2_norm());
            size = size.max(a.l2_norm());
        }
        let diff = diff.to_f64_lossy();
        let ratio = prev.filter(|&p| p > 0.0).map(|p| diff / p);
        log.push(IterationRecord { iter, diff_norm: diff, ratio });
        u = Trajectory::on_time_grid(tgrid, next, Provenance::Iterate(iter))?;
        if diff <= tolerance * size.to_f64_lossy() || diff == 0.0 {
            return Ok((u.with_provenance(Provenance::Converged), log));
        }
        if log.len() >= 3 && log.iter().rev().take(3).all(|r| r.ratio.is_some_and(|x| x >= 1.0)) {
            return Err(Error::Divergence { iterations: iter, ratio: ratio.unwrap_or(f64::INFINITY) });
        }
        prev = Some(diff);
    }
    Ok((u, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duhamel::explicit::a2_explicit;
    use crate::semigroup::airy_propagate;
    use crate::spectral::grid::FrequencyGrid;

    fn bump(grid: FrequencyGrid<f64>) -> SpectralField<f64> {
        let u: Vec<f64> = grid.points().iter().map(|x| (-x * x).exp() * (1.0 + 0.5 * x)).collect();
        let mut f = SpectralField::from_physical(grid, &u).unwrap();
        let nyq = grid.index_of(-(grid.n_modes() as i64) / 2).unwrap();
        f.coeffs_mut()[nyq] = Cplx::zero();
        f
    }

    #[test]
    fn constant_forcing_is_exact() {
        let grid = FrequencyGrid::new(4.0 * std::f64::consts::PI, 64).unwrap();
        let f = bump(grid);
        let tgrid = TimeGrid::one_sided(0.7, 13).unwrap();
        let traj = Trajectory::sample(tgrid, Provenance::Operator, |_| f.clone()).unwrap();
        let out = forced_response(&traj, LinearKernel::KdvBurgers).unwrap();
        let t = 0.7;
        let exact = f.apply_multiplier(true, |xi| {
            let lam = Cplx::new(-xi * xi, xi * xi * xi);
            if lam.norm() == 0.0 { Cplx::new(t, 0.0) } else { ((lam * t).exp() - 1.0) / lam }
        });
        assert!(out.last().sub(&exact).unwrap().l2_norm() < 1e-12 * exact.l2_norm());
    }

    #[test]
    fn integral_of_free_flow_is_second_coefficient() {
        let grid = FrequencyGrid::new(8.0 * std::f64::consts::PI, 64).unwrap();
        let h = bump(grid);
        let run = |steps| {
            let tgrid = TimeGrid::one_sided(0.4, steps).unwrap();
            let free = Trajectory::sample(tgrid, Provenance::Linear, |t| crate::semigroup::s_propagate(&h, t).unwrap()).unwrap();
            duhamel_integral(&free, 0.3).unwrap()
        };
        let exact = a2_explicit(0.3, &h).unwrap();
        let e1 = run(400).sub(&exact).unwrap().l2_norm();
        let e2 = run(800).sub(&exact).unwrap().l2_norm();
        assert!(e2 < 1e-3 * exact.l2_norm(), "relative error {}", e2 / exact.l2_norm());
        assert!(e1 / e2 > 3.0, "convergence ratio {}", e1 / e2);
    }

    #[test]
    fn requires_two_sided_grid() {
        let grid = FrequencyGrid::new(std::f64::consts::PI, 16).unwrap();
        let tgrid = TimeGrid::one_sided(1.0, 8).unwrap();
        let traj = Trajectory::sample(tgrid, Provenance::Operator, |_| SpectralField::zeros(grid)).unwrap();
        assert!(matches!(extended_duhamel(&traj), Err(Error::OneSidedGrid)));
    }

    /// Direct composite Simpson quadrature of both branches for one mode.
    #[test]
    fn branches_match_quadrature() {
        let grid = FrequencyGrid::new(std::f64::consts::PI, 16).unwrap();
        let forcing = |t: f64| (0.7 * t).cos() + 0.2 * t;
        let tgrid = TimeGrid::two_sided(1.5, 600).unwrap();
        let traj = Trajectory::sample(tgrid, Provenance::Operator, |t| {
            SpectralField::from_fn(grid, true, |xi| if xi.abs() == 1.0 { Cplx::new(forcing(t), 0.0) } else { Cplx::zero() })
        })
        .unwrap();
        let out = extended_duhamel(&traj).unwrap();
        let k = grid.index_of(1).unwrap();
        for t in [-1.2, -0.5, 0.4, 1.1] {
            let m = 4000;
            let (a, b) = if t >= 0.0 { (0.0, t) } else { (t, 0.0) };
            let hh = (b - a) / m as f64;
            let integrand = |s: f64| {
                let damping = if t >= 0.0 { t - s } else { t + s };
                let w = Cplx::from_polar((-damping.abs()).exp(), t - s);
                w * forcing(s)
            };
            let mut sum = integrand(a) + integrand(b);
            for i in 1..m {
                sum += integrand(a + i as f64 * hh) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let mut exact = sum * hh / 3.0 * eta(t);
            if t < 0.0 {
                exact = -exact;
            }
            let got = out.at(t).unwrap().coeffs()[k];
            assert!((got - exact).norm() < 1e-5, "t = {t}: {got} vs {exact}");
        }
    }

    #[test]
    fn negative_branch_satisfies_corrected_equation() {
        let grid = FrequencyGrid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let g = bump(grid);
        let residual = |steps| {
            let tgrid = TimeGrid::two_sided(2.0, steps).unwrap();
            let traj = Trajectory::sample(tgrid, Provenance::Operator, |t| airy_propagate(&g, t).scale((0.5 * t).cos())).unwrap();
            negative_branch_residual(&traj).unwrap()
        };
        let (coarse, fine) = (residual(2000), residual(4000));
        assert!(fine.corrected < 1e-3, "corrected residual {}", fine.corrected);
        assert!(coarse.corrected / fine.corrected > 3.0, "{} -> {}", coarse.corrected, fine.corrected);
        assert!(fine.literal > 1e-2, "literal residual {}", fine.literal);
    }

    #[test]
    fn small_data_fixed_point_contracts() {
        let grid = FrequencyGrid::new(4.0 * std::f64::consts::PI, 32).unwrap();
        let phi = bump(grid).scale(0.2);
        let tgrid = TimeGrid::two_sided(2.0, 400).unwrap();
        let (u, log) = windowed_fixed_point(&phi, 0.5, tgrid, 40, 1e-12).unwrap();
        assert_eq!(u.provenance(), Provenance::Converged);
        assert!(log.iter().filter_map(|r| r.ratio).all(|r| r < 0.5));
    }
}
