//! Interaction geometry of two counterexample packets at opposite frequencies.

use serde::{Deserialize, Serialize};

use crate::illposed::counterexample::INTERVAL_WIDTH;

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Frequencies `xi_1` such that `xi_1` and `xi - xi_1` lie in opposite intervals `+-I_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSet {
    pub xi: f64,
    pub intervals: Vec<Interval>,
}

impl InteractionSet {
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, xi1: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(xi1))
    }
}

/// `K_xi = {xi_1 in -I_N, xi - xi_1 in I_N} u {xi_1 in I_N, xi - xi_1 in -I_N}`.
pub fn k_xi_set(xi: f64, n: f64) -> InteractionSet {
    let pos = Interval { lo: n, hi: n + INTERVAL_WIDTH };
    let neg = Interval { lo: -pos.hi, hi: -pos.lo };
    // xi - xi_1 in I  <=>  xi_1 in xi - I
    let shifted = |i: Interval| Interval { lo: xi - i.hi, hi: xi - i.lo };
    let intervals = [neg.intersect(shifted(pos)), pos.intersect(shifted(neg))].into_iter().flatten().collect();
    InteractionSet { xi, intervals }
}

/// Measured constants of `|3 xi xi_1 xi_2| <= C3 N^2` and `c2 N^2 <= |2 xi_1 xi_2| <= C2 N^2`
/// over `xi_1 in K_xi`, `|xi| <= band`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceConstants {
    pub n: f64,
    /// `max |3 xi xi_1 xi_2| / N^2`.
    pub modulation_upper: f64,
    /// Smallest `|3 xi xi_1 xi_2| / N^2`; zero at `xi = 0`.
    pub modulation_lower: f64,
    pub dissipation_lower: f64,
    pub dissipation_upper: f64,
    pub min_measure: f64,
}

pub fn resonance_constants(n: f64, band: f64, samples: usize) -> ResonanceConstants {
    let mut out = ResonanceConstants {
        n,
        modulation_upper: 0.0,
        modulation_lower: f64::INFINITY,
        dissipation_lower: f64::INFINITY,
        dissipation_upper: 0.0,
        min_measure: f64::INFINITY,
    };
    let n2 = n * n;
    for i in 0..=samples {
        let xi = -band + 2.0 * band * i as f64 / samples as f64;
        let set = k_xi_set(xi, n);
        out.min_measure = out.min_measure.min(set.measure());
        for iv in &set.intervals {
            for j in 0..=samples {
                let xi1 = iv.lo + iv.length() * j as f64 / samples as f64;
                let xi2 = xi - xi1;
                let m = (3.0 * xi * xi1 * xi2).abs() / n2;
                let d = (2.0 * xi1 * xi2).abs() / n2;
                out.modulation_upper = out.modulation_upper.max(m);
                out.modulation_lower = out.modulation_lower.min(m);
                out.dissipation_lower = out.dissipation_lower.min(d);
                out.dissipation_upper = out.dissipation_upper.max(d);
            }
        }
    }
    out
}

/// Pointwise check of the real part of the interaction integrand
/// `exp(-(xi_1^2 + xi_2^2) t) exp(i 3 xi xi_1 xi_2 t) - exp(-xi^2 t)` against
/// `-exp(-t/4) + exp(-2 N^2 t)` on grid points `xi_1 in K_xi`, `xi` in the band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealPartCheck {
    pub n: f64,
    pub t: f64,
    pub points: usize,
    /// `max (Re - bound)` with the bound `-exp(-t/4) + exp(-2 N^2 t)`; nonpositive when it
    /// holds.
    pub max_excess: f64,
    /// Same with `exp(-2 (N+2)^2 t)` in place of `exp(-2 N^2 t)`.
    pub max_excess_tight: f64,
}

impl RealPartCheck {
    pub fn holds(&self) -> bool {
        self.max_excess <= 0.0
    }
}

pub fn real_part_check(n: f64, t: f64, band: f64, spacing: f64) -> RealPartCheck {
    let bound = -(-t / 4.0).exp() + (-2.0 * n * n * t).exp();
    let tight = -(-t / 4.0).exp() + (-2.0 * (n + 2.0).powi(2) * t).exp();
    let mut out = RealPartCheck { n, t, points: 0, max_excess: f64::NEG_INFINITY, max_excess_tight: f64::NEG_INFINITY };
    let m = (band / spacing).floor() as i64;
    let reach = ((n + 2.0 + band) / spacing).ceil() as i64;
    for k in -m..=m {
        let xi = k as f64 * spacing;
        let set = k_xi_set(xi, n);
        for j in -reach..=reach {
            let xi1 = j as f64 * spacing;
            if !set.contains(xi1) {
                continue;
            }
            let xi2 = xi - xi1;
            let re = (-(xi1 * xi1 + xi2 * xi2) * t).exp() * (3.0 * xi * xi1 * xi2 * t).cos() - (-xi * xi * t).exp();
            out.points += 1;
            out.max_excess = out.max_excess.max(re - bound);
            out.max_excess_tight = out.max_excess_tight.max(re - tight);
        }
    }
    out
}
