use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::spectral::dyadic::DyadicIndex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub n: DyadicIndex,
    /// Modulation block, absent for per-frequency ledgers.
    pub l: Option<DyadicIndex>,
    pub value: f64,
}

/// Weighted block contributions of one norm evaluation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DyadicLedger {
    pub norm: String,
    pub field: String,
    pub entries: Vec<LedgerEntry>,
}

impl DyadicLedger {
    pub fn new(norm: impl Into<String>, field: impl Into<String>) -> Self {
        Self { norm: norm.into(), field: field.into(), entries: Vec::new() }
    }

    pub fn push(&mut self, n: DyadicIndex, l: Option<DyadicIndex>, value: f64) {
        debug_assert!(value.is_finite() && value >= 0.0);
        self.entries.push(LedgerEntry { n, l, value });
    }

    pub fn get(&self, n: DyadicIndex, l: Option<DyadicIndex>) -> Option<f64> {
        self.entries.iter().find(|e| e.n == n && e.l == l).map(|e| e.value)
    }

    /// `N,L,value` rows; `L` is empty for per-frequency entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,L,value\n");
        for e in &self.entries {
            let l = e.l.map(|l| format!("{:.17e}", l.value_f64())).unwrap_or_default();
            let _ = writeln!(out, "{:.17e},{},{:.17e}", e.n.value_f64(), l, e.value);
        }
        out
    }
}
