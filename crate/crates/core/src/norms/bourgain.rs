//! Dyadic space-time norms `X^{s,b,q}` and `Y^{s,b}` in the modulation frame.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::ledger::DyadicLedger;
use crate::scalar::{Cplx, Real};
use crate::spectral::bracket;
use crate::spectral::dyadic::{DyadicIndex, DyadicRange};
use crate::spectral::grid::FrequencyGrid;
use crate::spectral::spacetime::SpaceTimeField;

/// Largest tolerated share of the `L^2` norm above `3/4` of the modulation Nyquist.
pub const MODULATION_TAIL: f64 = 1e-2;

/// Summation exponent over modulation blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesovSum {
    One,
    Two,
}

impl BesovSum {
    pub fn from_f64(q: f64) -> Result<Self> {
        match q {
            q if q == 1.0 => Ok(BesovSum::One),
            q if q == 2.0 => Ok(BesovSum::Two),
            _ => Err(Error::InvalidArgument(format!("Besov summation exponent must be 1 or 2, got {q}"))),
        }
    }
}

/// Values indexed by frequency block (rows) and modulation block (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct CellTable<T> {
    pub n_blocks: Vec<DyadicIndex>,
    pub l_blocks: Vec<DyadicIndex>,
    values: Vec<T>,
}

impl<T: Real> CellTable<T> {
    pub fn new(n_blocks: Vec<DyadicIndex>, l_blocks: Vec<DyadicIndex>, values: Vec<T>) -> Result<Self> {
        let len = n_blocks.len() * l_blocks.len();
        if values.len() != len {
            return Err(Error::SizeMismatch { expected: len, got: values.len() });
        }
        Ok(Self { n_blocks, l_blocks, values })
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.l_blocks.len() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let w = self.l_blocks.len();
        &self.values[i * w..(i + 1) * w]
    }

    /// Multiplies row `i` by `f(N_i)`.
    pub fn scale_rows(&self, f: impl Fn(DyadicIndex) -> T) -> Self {
        let w = self.l_blocks.len();
        let values = self.values.iter().enumerate().map(|(idx, &v)| v * f(self.n_blocks[idx / w])).collect();
        Self { values, ..self.clone() }
    }
}

/// `<N>^s <L + N^2>^b` at the block centres.
pub fn x_weight<T: Real>(n: DyadicIndex, l: DyadicIndex, s: T, b: T) -> T {
    let nv: T = n.value();
    let lv: T = l.value();
    bracket(nv).powf(s) * bracket(lv + nv * nv).powf(b)
}

pub(crate) fn check_modulation_resolved<T: Real>(u: &SpaceTimeField<T>) -> Result<()> {
    let cut = u.tgrid().sigma_nyquist() * T::lit(0.75);
    let nt = u.tgrid().n_steps();
    let mut tail = T::zero();
    let mut total = T::zero();
    for (idx, c) in u.coeffs().iter().enumerate() {
        let e = c.norm_sqr();
        total = total + e;
        if u.tgrid().sigma(idx % nt).abs() > cut {
            tail = tail + e;
        }
    }
    if total > T::zero() && (tail / total).sqrt() > T::lit(MODULATION_TAIL) {
        return Err(Error::resolution(
            format!("{:.2e} of the norm sits near the modulation Nyquist", (tail / total).sqrt().to_f64_lossy()),
            "increase n_steps",
        ));
    }
    Ok(())
}

/// `||P_N Q_L u||_{L^2}` for all blocks of the field's ranges.
pub fn block_l2<T: Real>(u: &SpaceTimeField<T>) -> CellTable<T> {
    let nr = u.frequency_range();
    let lr = u.modulation_range();
    let n_blocks: Vec<DyadicIndex> = nr.blocks().collect();
    let l_blocks: Vec<DyadicIndex> = lr.blocks().collect();
    let nt = u.tgrid().n_steps();
    let (n0, l0) = (nr.lo.0, lr.lo.0);
    let sigma_w: Vec<Vec<(usize, T)>> = (0..nt)
        .map(|m| lr.weights_at(u.tgrid().sigma(m)).map(|(b, w)| ((b.0 - l0) as usize, w * w)).collect())
        .collect();
    let mut acc = vec![T::zero(); n_blocks.len() * l_blocks.len()];
    let w = l_blocks.len();
    for k in 0..u.xgrid().n_modes() {
        let xi_w: Vec<(usize, T)> = nr.weights_at(u.xgrid().xi(k)).map(|(b, w)| ((b.0 - n0) as usize, w * w)).collect();
        for m in 0..nt {
            let e = u.coeff(k, m).norm_sqr();
            if e == T::zero() {
                continue;
            }
            for &(i, wn) in &xi_w {
                for &(j, wl) in &sigma_w[m] {
                    acc[i * w + j] = acc[i * w + j] + e * wn * wl;
                }
            }
        }
    }
    let meas = u.measure();
    let values = acc.into_iter().map(|a| (a * meas).sqrt()).collect();
    CellTable { n_blocks, l_blocks, values }
}

/// `X^{s,b,q}` norm and the weighted `(N, L)` ledger.
pub fn xsbq_norm<T: Real>(u: &SpaceTimeField<T>, s: T, b: T, q: BesovSum) -> Result<(T, DyadicLedger)> {
    check_modulation_resolved(u)?;
    let table = block_l2(u);
    let mut ledger = DyadicLedger::new(format!("X^{{{s},{b},{}}}", if q == BesovSum::One { 1 } else { 2 }), "");
    let mut total = T::zero();
    for (i, &n) in table.n_blocks.iter().enumerate() {
        let mut row = T::zero();
        for (j, &l) in table.l_blocks.iter().enumerate() {
            let v = x_weight(n, l, s, b) * table.get(i, j);
            ledger.push(n, Some(l), v.to_f64_lossy());
            row = row + if q == BesovSum::One { v } else { v * v };
        }
        let row = if q == BesovSum::One { row } else { row.sqrt() };
        total = total + row * row;
    }
    Ok((total.sqrt(), ledger))
}

/// `||P_N f||_{L^1_t L^2_x}` for every block of `range`, from spatial transforms at the
/// periodic time nodes.
pub(crate) fn l1l2_per_block<T: Real>(slices: &[Vec<Cplx<T>>], xgrid: &FrequencyGrid<T>, range: &DyadicRange, dt: T) -> Vec<T> {
    let n0 = range.lo.0;
    let weights: Vec<Vec<(usize, T)>> = (0..xgrid.n_modes())
        .map(|k| range.weights_at(xgrid.xi(k)).map(|(b, w)| ((b.0 - n0) as usize, w * w)).collect())
        .collect();
    let meas = xgrid.measure();
    let mut out = vec![T::zero(); range.len()];
    let mut acc = vec![T::zero(); range.len()];
    for slice in slices {
        acc.iter_mut().for_each(|a| *a = T::zero());
        for (k, c) in slice.iter().enumerate() {
            let e = c.norm_sqr();
            for &(i, w) in &weights[k] {
                acc[i] = acc[i] + e * w;
            }
        }
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = *o + (*a * meas).sqrt() * dt;
        }
    }
    out
}

fn y_symbol<T: Real>(u: &SpaceTimeField<T>, b: T) -> Result<SpaceTimeField<T>> {
    let half = T::lit(0.5);
    if b == half {
        Ok(u.kdvb_operator())
    } else if b == -half {
        Ok(u.clone())
    } else {
        Err(Error::InvalidArgument(format!("Y^{{s,b}} is defined for b = 1/2 or -1/2, got {b}")))
    }
}

/// Unweighted `Y^{0,b}` pieces: `||F^{-1}[(i sigma + xi^2 + 1)^{b + 1/2} phi_N phi_L v]||_{L^1 L^2}`
/// per cell and `||F^{-1}[(...)^{b + 1/2} phi_N v]||_{L^1 L^2}` per row.
#[derive(Clone, Debug)]
pub struct YTable<T> {
    pub cells: CellTable<T>,
    pub rows: Vec<T>,
}

pub fn y_table<T: Real>(u: &SpaceTimeField<T>, b: T) -> Result<YTable<T>> {
    let w = y_symbol(u, b)?;
    let nr = u.frequency_range();
    let lr = u.modulation_range();
    let dt = u.tgrid().dt();
    let xgrid = *u.xgrid();
    let rows = l1l2_per_block(&w.time_slices(), &xgrid, &nr, dt);
    let l_blocks: Vec<DyadicIndex> = lr.blocks().collect();
    let columns: Vec<Vec<T>> = l_blocks
        .par_iter()
        .map(|&l| {
            let part = w.apply_real_multiplier(|sigma, _| lr.multiplier(l, sigma));
            l1l2_per_block(&part.time_slices(), &xgrid, &nr, dt)
        })
        .collect();
    let n_blocks: Vec<DyadicIndex> = nr.blocks().collect();
    let mut values = Vec::with_capacity(n_blocks.len() * l_blocks.len());
    for i in 0..n_blocks.len() {
        values.extend(columns.iter().map(|c| c[i]));
    }
    Ok(YTable { cells: CellTable::new(n_blocks, l_blocks, values)?, rows })
}

/// `Y^{s,b}` norm with the exact symbol and its per-`N` ledger.
pub fn ysb_norm<T: Real>(u: &SpaceTimeField<T>, s: T, b: T) -> Result<(T, DyadicLedger)> {
    let w = y_symbol(u, b)?;
    let nr = u.frequency_range();
    let rows = l1l2_per_block(&w.time_slices(), u.xgrid(), &nr, u.tgrid().dt());
    let mut ledger = DyadicLedger::new(format!("Y^{{{s},{b}}}"), "");
    let mut total = T::zero();
    for (n, v) in nr.blocks().zip(rows) {
        let v = bracket(n.value::<T>()).powf(s) * v;
        ledger.push(n, None, v.to_f64_lossy());
        total = total + v * v;
    }
    Ok((total.sqrt(), ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::cutoff::eta;
    use crate::spectral::field::SpectralField;
    use crate::spectral::grid::TimeGrid;
    use crate::semigroup::airy_propagate;

    fn grids() -> (TimeGrid<f64>, FrequencyGrid<f64>) {
        (TimeGrid::two_sided(1.0, 256).unwrap(), FrequencyGrid::new(4.0 * std::f64::consts::PI, 64).unwrap())
    }

    fn wave() -> SpaceTimeField<f64> {
        let (tg, xg) = grids();
        let phi = SpectralField::from_fn(xg, true, |xi| Cplx::new((-(xi.abs() - 2.0).powi(2)).exp(), 0.0));
        SpaceTimeField::from_fn(tg, xg, |t| airy_propagate(&phi, t).scale(eta(t))).unwrap()
    }

    #[test]
    fn x000_is_the_l2_norm() {
        let u = wave();
        let (v, ledger) = xsbq_norm(&u, 0.0, 0.0, BesovSum::Two).unwrap();
        // the squared cutoffs do not sum to one, so the identity is a two-sided bound
        assert!(v <= u.l2_norm() * (1.0 + 1e-12) && v >= 0.5 * u.l2_norm());
        assert!(!ledger.entries.is_empty());
    }

    #[test]
    fn single_block_field() {
        let u = wave();
        // xi = +-2 and sigma = 0 are the only grid points where one block owns everything
        let n = DyadicIndex(1);
        let l = u.modulation_range().lo;
        let p = u.project_n(n).unwrap().project_l(l).unwrap();
        let pure = p.apply_real_multiplier(|sigma, xi| {
            let nr = u.frequency_range();
            let lr = u.modulation_range();
            if nr.multiplier(n, xi) == 1.0 && lr.multiplier(l, sigma) == 1.0 { 1.0 } else { 0.0 }
        });
        let (v, _) = xsbq_norm(&pure, -1.0, 0.5, BesovSum::One).unwrap();
        let expect = x_weight(n, l, -1.0, 0.5) * pure.l2_norm();
        assert!((v - expect).abs() < 1e-12 * expect, "{v} vs {expect}");
    }

    #[test]
    fn y_with_zero_power_is_weighted_l1l2() {
        let u = wave();
        let (v, ledger) = ysb_norm(&u, 0.0, -0.5).unwrap();
        let nr = u.frequency_range();
        let mut direct = 0.0;
        for n in nr.blocks() {
            let slices = u.project_n(n).unwrap().slice_fields();
            let l1: f64 = slices.iter().map(|s| s.l2_norm() * u.tgrid().dt()).sum();
            assert!((ledger.get(n, None).unwrap() - l1).abs() < 1e-12 * (1.0 + l1));
            direct += l1 * l1;
        }
        assert!((v - direct.sqrt()).abs() < 1e-12 * v);
    }

    /// `(d_t + d_xxx - d_xx + 1) P_N u` by central differences in time.
    #[test]
    fn y_symbol_matches_finite_differences() {
        let (tg, xg) = grids();
        let bump = |t: f64| {
            let s: Vec<f64> = xg.points().iter().map(|x| (-(x - 0.5 * t).powi(2)).exp() * (-4.0 * t * t).exp()).collect();
            SpectralField::from_physical(xg, &s).unwrap()
        };
        let u = SpaceTimeField::from_fn(tg, xg, bump).unwrap();
        let n = DyadicIndex(0);
        let (_, ledger) = ysb_norm(&u, 0.0, 0.5).unwrap();
        let nr = u.frequency_range();
        let h = 1e-4;
        let mut l1 = 0.0;
        for t in tg.periodic_nodes() {
            let (a, b, c) = (bump(t - h), bump(t), bump(t + h));
            let coeffs: Vec<Cplx<f64>> = (0..xg.n_modes())
                .map(|k| {
                    let xi = xg.xi(k);
                    let dt = (c.coeffs()[k] - a.coeffs()[k]) / (2.0 * h);
                    (dt + b.coeffs()[k] * Cplx::new(xi * xi + 1.0, -xi * xi * xi)) * nr.multiplier(n, xi)
                })
                .collect();
            l1 += SpectralField::from_coeffs(xg, coeffs, true).unwrap().l2_norm() * tg.dt();
        }
        let got = ledger.get(n, None).unwrap();
        assert!((got - l1).abs() < 1e-6 * l1, "{got} vs {l1}");
    }

    #[test]
    fn rejects_unresolved_modulation() {
        let (tg, xg) = grids();
        let phi = SpectralField::from_fn(xg, true, |xi| Cplx::new((-xi * xi).exp(), 0.0));
        // oscillates at the time Nyquist in the modulation frame
        let u = SpaceTimeField::from_fn(tg, xg, |t| {
            let j = ((t - tg.start()) / tg.dt()).round() as i64;
            airy_propagate(&phi, t).scale(if j % 2 == 0 { 1.0 } else { -1.0 })
        })
        .unwrap();
        assert!(matches!(xsbq_norm(&u, 0.0, 0.5, BesovSum::One), Err(Error::Resolution { .. })));
    }
}
