//! Function-space norms on discrete fields and the audit of the linear and bilinear
//! estimates.

pub mod audit;
pub mod bourgain;
pub mod ledger;
pub mod mixed;
pub mod sobolev;
pub mod sum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::spacetime::SpaceTimeField;

pub use bourgain::{xsbq_norm, ysb_norm, BesovSum};
pub use ledger::DyadicLedger;
pub use mixed::{mixed_norm, Exponent, MixedOrder};
pub use sobolev::{sobolev_norm, sobolev_norm_band};
pub use sum::{sum_space_norm, z_beta_norm, SplitCertificate, SumSpace, ZSplit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Sobolev,
    #[serde(rename = "mixed")]
    MixedLpLq,
    #[serde(rename = "x-sbq")]
    Xsbq,
    #[serde(rename = "y-sb")]
    Ysb,
    #[serde(rename = "sum-s")]
    SumS,
    #[serde(rename = "sum-n")]
    SumN,
    #[serde(rename = "z-beta")]
    ZBeta,
}

/// Which norm to evaluate and with which exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormSpec {
    pub kind: NormKind,
    /// Regularity exponent.
    pub s: f64,
    /// Modulation exponent; fixed to `+1/2` for `sum-s` and `-1/2` for `sum-n`.
    pub b: f64,
    /// Summation exponent over modulation blocks.
    pub q: f64,
    pub beta: f64,
    /// Space exponent of `mixed`.
    pub p_x: f64,
    /// Time exponent of `mixed`.
    pub q_t: f64,
    pub order: MixedOrder,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self { kind: NormKind::SumS, s: -1.0, b: 0.5, q: 1.0, beta: 1.0, p_x: 2.0, q_t: 2.0, order: MixedOrder::TimeInner }
    }
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: format!("norm.{key}"), message });
        if !self.s.is_finite() {
            return bad("s", "must be finite".into());
        }
        if BesovSum::from_f64(self.q).is_err() {
            return bad("q", format!("must be 1 or 2, got {}", self.q));
        }
        match self.kind {
            NormKind::Ysb if self.b.abs() != 0.5 => bad("b", format!("Y norms need b = 1/2 or -1/2, got {}", self.b)),
            NormKind::SumS if self.b != 0.5 => bad("b", format!("sum-s fixes b = 1/2, got {}", self.b)),
            NormKind::SumN if self.b != -0.5 => bad("b", format!("sum-n fixes b = -1/2, got {}", self.b)),
            NormKind::ZBeta if !(self.beta >= 1.0) => bad("beta", format!("must be >= 1, got {}", self.beta)),
            NormKind::MixedLpLq => {
                for (key, v) in [("p_x", self.p_x), ("q_t", self.q_t)] {
                    if Exponent::from_f64(v).is_err() {
                        return bad(key, format!("must be 1, 2 or inf, got {v}"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Value of a space-time norm with its block bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub ledger: Option<DyadicLedger>,
    pub split: Option<SplitCertificate>,
    pub z_split: Option<ZSplit>,
    /// `true` when `value` is an upper bound from a restricted family of splits.
    pub upper_bound: bool,
}

/// Evaluates a space-time norm. `sobolev` is the supremum over time of the spatial norm.
pub fn evaluate<T: Real>(u: &SpaceTimeField<T>, spec: &NormSpec) -> Result<NormValue> {
    spec.validate()?;
    let s = T::lit(spec.s);
    let plain = |value: T, ledger: Option<DyadicLedger>| NormValue {
        value: value.to_f64_lossy(),
        ledger,
        split: None,
        z_split: None,
        upper_bound: false,
    };
    Ok(match spec.kind {
        NormKind::Sobolev => {
            let v = u.slice_fields().iter().map(|f| sobolev_norm(f, s)).fold(T::zero(), T::max);
            plain(v, None)
        }
        NormKind::MixedLpLq => plain(mixed_norm(u, spec.p_x, spec.q_t, spec.order)?, None),
        NormKind::Xsbq => {
            let (v, l) = xsbq_norm(u, s, T::lit(spec.b), BesovSum::from_f64(spec.q)?)?;
            plain(v, Some(l))
        }
        NormKind::Ysb => {
            let (v, l) = ysb_norm(u, s, T::lit(spec.b))?;
            plain(v, Some(l))
        }
        NormKind::SumS | NormKind::SumN => {
            let space = if spec.kind == NormKind::SumS { SumSpace::Resolution } else { SumSpace::Nonlinear };
            let (v, cert) = sum_space_norm(u, space, s)?;
            NormValue { value: v.to_f64_lossy(), ledger: None, split: Some(cert), z_split: None, upper_bound: true }
        }
        NormKind::ZBeta => {
            let (v, split) = z_beta_norm(u, T::lit(spec.beta))?;
            NormValue { value: v.to_f64_lossy(), ledger: None, split: None, z_split: Some(split), upper_bound: true }
        }
    })
}
