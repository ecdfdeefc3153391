use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::spacetime::SpaceTimeField;

/// Lebesgue exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    One,
    Two,
    Infinity,
}

impl Exponent {
    pub fn from_f64(p: f64) -> Result<Self> {
        match p {
            p if p == 1.0 => Ok(Exponent::One),
            p if p == 2.0 => Ok(Exponent::Two),
            p if p == f64::INFINITY => Ok(Exponent::Infinity),
            _ => Err(Error::UnsupportedExponent(p)),
        }
    }

    /// `(sum |v|^p w)^{1/p}` for a uniform weight `w`.
    pub fn norm<T: Real>(self, values: impl Iterator<Item = T>, weight: T) -> T {
        match self {
            Exponent::One => values.fold(T::zero(), |a, v| a + v.abs()) * weight,
            Exponent::Two => (values.fold(T::zero(), |a, v| a + v * v) * weight).sqrt(),
            Exponent::Infinity => values.fold(T::zero(), |a, v| a.max(v.abs())),
        }
    }
}

/// Which variable is integrated first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixedOrder {
    /// `L^p_x L^q_t`: the time norm is taken first, at every grid point.
    #[default]
    TimeInner,
    /// `L^q_t L^p_x`: the space norm is taken first, at every time node.
    SpaceInner,
}

/// Iterated norm of physical samples `rows[j][k] = u(t_j, x_k)` with cell sizes `dt`, `dx`.
pub fn mixed_norm_samples<T: Real>(rows: &[Vec<Cplx<T>>], dt: T, dx: T, p_x: Exponent, q_t: Exponent, order: MixedOrder) -> T {
    match order {
        MixedOrder::SpaceInner => {
            let inner = rows.iter().map(|r| p_x.norm(r.iter().map(|c| c.norm()), dx));
            q_t.norm(inner, dt)
        }
        MixedOrder::TimeInner => {
            let nx = rows.first().map_or(0, |r| r.len());
            let inner = (0..nx).map(|k| q_t.norm(rows.iter().map(|r| r[k].norm()), dt));
            p_x.norm(inner, dx)
        }
    }
}

/// `L^p_x L^q_t` or `L^q_t L^p_x` norm over one period of the time window and the box.
pub fn mixed_norm<T: Real>(u: &SpaceTimeField<T>, p_x: f64, q_t: f64, order: MixedOrder) -> Result<T> {
    let p_x = Exponent::from_f64(p_x)?;
    let q_t = Exponent::from_f64(q_t)?;
    let rows = u.physical();
    Ok(mixed_norm_samples(&rows, u.tgrid().dt(), u.xgrid().dx(), p_x, q_t, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::SpectralField;
    use crate::spectral::grid::{FrequencyGrid, TimeGrid};

    fn cell_indicator(j0: usize, k0: usize) -> SpaceTimeField<f64> {
        let xg = FrequencyGrid::new(std::f64::consts::PI, 16).unwrap();
        let tg = TimeGrid::two_sided(1.0, 32).unwrap();
        let slices: Vec<Vec<Cplx<f64>>> = (0..32)
            .map(|j| {
                let s: Vec<f64> = (0..16).map(|k| if j == j0 && k == k0 { 1.0 } else { 0.0 }).collect();
                SpectralField::from_physical(xg, &s).unwrap().into_coeffs()
            })
            .collect();
        SpaceTimeField::from_time_slices(tg, xg, &slices, true).unwrap()
    }

    #[test]
    fn indicator_of_one_cell() {
        let u = cell_indicator(5, 3);
        let (dt, dx) = (u.tgrid().dt(), u.xgrid().dx());
        let ps = [(1.0, dx), (2.0, dx.sqrt()), (f64::INFINITY, 1.0)];
        let qs = [(1.0, dt), (2.0, dt.sqrt()), (f64::INFINITY, 1.0)];
        for &(p, wp) in &ps {
            for &(q, wq) in &qs {
                for order in [MixedOrder::TimeInner, MixedOrder::SpaceInner] {
                    let v = mixed_norm(&u, p, q, order).unwrap();
                    assert!((v - wp * wq).abs() < 1e-12 * wp * wq, "p={p} q={q}: {v}");
                }
            }
        }
    }

    #[test]
    fn l2l2_is_the_spacetime_l2_norm() {
        let xg = FrequencyGrid::new(2.0 * std::f64::consts::PI, 32).unwrap();
        let tg = TimeGrid::two_sided(1.0, 64).unwrap();
        let u = SpaceTimeField::from_fn(tg, xg, |t| {
            let s: Vec<f64> = xg.points().iter().map(|x| (-(x - t) * (x - t)).exp() * crate::spectral::cutoff::eta(t)).collect();
            SpectralField::from_physical(xg, &s).unwrap()
        })
        .unwrap();
        let a = mixed_norm(&u, 2.0, 2.0, MixedOrder::TimeInner).unwrap();
        let b = mixed_norm(&u, 2.0, 2.0, MixedOrder::SpaceInner).unwrap();
        assert!((a - b).abs() < 1e-13 * a);
        assert!((a - u.l2_norm()).abs() < 1e-12 * a);
    }

    #[test]
    fn rejects_other_exponents() {
        assert!(matches!(Exponent::from_f64(3.0), Err(Error::UnsupportedExponent(_))));
    }
}
