use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::cutoff::{eta, phi};

/// Dyadic number `2^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicIndex(pub i32);

impl DyadicIndex {
    pub fn exponent(self) -> i32 {
        self.0
    }

    pub fn value<T: Real>(self) -> T {
        T::lit(2.0).powi(self.0)
    }

    pub fn value_f64(self) -> f64 {
        2f64.powi(self.0)
    }

    /// Index of an exact power of two.
    pub fn from_value(v: f64) -> Result<Self> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("dyadic value must be positive, got {v}")));
        }
        let e = v.log2().round() as i32;
        if 2f64.powi(e) != v {
            return Err(Error::InvalidArgument(format!("{v} is not a power of two")));
        }
        Ok(DyadicIndex(e))
    }

    pub fn double(self) -> Self {
        DyadicIndex(self.0 + 1)
    }

    pub fn half(self) -> Self {
        DyadicIndex(self.0 - 1)
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value_f64())
    }
}

/// Finite range of dyadic blocks covering a discrete variable with spacing `d` and
/// maximum modulus `max`: the bottom block is the largest power of two `<= d` and also
/// owns the zero mode, the top block is the smallest power of two `>= max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicRange {
    pub lo: DyadicIndex,
    pub hi: DyadicIndex,
}

impl DyadicRange {
    pub fn covering(spacing: f64, max: f64) -> Self {
        let lo = spacing.log2().floor() as i32;
        let hi = (max.log2().ceil() as i32).max(lo);
        Self { lo: DyadicIndex(lo), hi: DyadicIndex(hi) }
    }

    pub fn contains(&self, n: DyadicIndex) -> bool {
        n >= self.lo && n <= self.hi
    }

    pub fn blocks(&self) -> impl DoubleEndedIterator<Item = DyadicIndex> + Clone {
        (self.lo.0..=self.hi.0).map(DyadicIndex)
    }

    pub fn len(&self) -> usize {
        (self.hi.0 - self.lo.0 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check(&self, n: DyadicIndex, what: &str) -> Result<()> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(Error::resolution(
                format!("{what} block {n} outside the representable range [{}, {}]", self.lo, self.hi),
                if n > self.hi { "increase the resolution (n_modes or n_steps)" } else { "enlarge the box or window" },
            ))
        }
    }

    /// Cutoff of block `n` at `x`; the bottom block is `eta(x / lo)` so the zero mode is
    /// included and the blocks sum to one on the covered grid.
    pub fn multiplier<T: Real>(&self, n: DyadicIndex, x: T) -> T {
        let nv: T = n.value();
        if n == self.lo { eta(x / nv) } else { phi(x / nv) }
    }

    /// Blocks whose cutoff may be nonzero at `x`, with their weights.
    pub fn weights_at<T: Real>(&self, x: T) -> impl Iterator<Item = (DyadicIndex, T)> + '_ {
        self.blocks().filter_map(move |b| {
            let w = self.multiplier(b, x);
            (w != T::zero()).then_some((b, w))
        })
    }
}

/// Range selector for grouped projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "index")]
pub enum BlockSelector {
    /// All blocks `<= N`.
    AtMost(DyadicIndex),
    /// All blocks `> N`.
    Above(DyadicIndex),
    /// `N/2, N, 2N`.
    Near(DyadicIndex),
    Exactly(DyadicIndex),
}

impl BlockSelector {
    pub fn selects(&self, b: DyadicIndex) -> bool {
        match *self {
            BlockSelector::AtMost(n) => b <= n,
            BlockSelector::Above(n) => b > n,
            BlockSelector::Near(n) => (b.0 - n.0).abs() <= 1,
            BlockSelector::Exactly(n) => b == n,
        }
    }

    pub fn multiplier<T: Real>(&self, range: &DyadicRange, x: T) -> T {
        range
            .blocks()
            .filter(|b| self.selects(*b))
            .fold(T::zero(), |acc, b| acc + range.multiplier(b, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_covers_grid() {
        let r = DyadicRange::covering(0.25, 8.0);
        assert_eq!(r.lo, DyadicIndex(-2));
        assert_eq!(r.hi, DyadicIndex(3));
        let r = DyadicRange::covering(0.3, 9.0);
        assert_eq!(r.lo, DyadicIndex(-2));
        assert_eq!(r.hi, DyadicIndex(4));
    }

    #[test]
    fn partition_of_unity_on_lattice() {
        let r = DyadicRange::covering(1.0 / 16.0, 256.0);
        for k in -4096..4096 {
            let xi = k as f64 / 16.0;
            let s: f64 = r.blocks().map(|b| r.multiplier(b, xi)).sum();
            assert!((s - 1.0).abs() < 1e-12, "xi={xi} sum={s}");
        }
    }

    #[test]
    fn from_value_rejects_non_powers() {
        assert_eq!(DyadicIndex::from_value(8.0).unwrap(), DyadicIndex(3));
        assert_eq!(DyadicIndex::from_value(0.25).unwrap(), DyadicIndex(-2));
        assert!(DyadicIndex::from_value(3.0).is_err());
    }
}
