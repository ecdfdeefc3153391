use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::field::SpectralField;
use crate::spectral::grid::{FrequencyGrid, TimeGrid};

/// Where a trajectory came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum Provenance {
    /// Free evolution of the datum.
    Linear,
    /// `k`-th coefficient of the Picard series.
    PicardCoefficient(usize),
    /// `k`-th Picard iterate of the fixed-point map.
    Iterate(usize),
    /// Converged fixed point.
    Converged,
    /// Output of a linear operator applied to a given forcing.
    Operator,
}

/// Snapshots of a field at increasing times on one frequency grid.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    times: Vec<T>,
    snapshots: Vec<SpectralField<T>>,
    provenance: Provenance,
    tgrid: Option<TimeGrid<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(times: Vec<T>, snapshots: Vec<SpectralField<T>>, provenance: Provenance) -> Result<Self> {
        if times.len() != snapshots.len() {
            return Err(Error::SizeMismatch { expected: times.len(), got: snapshots.len() });
        }
        if times.is_empty() {
            return Err(Error::InvalidArgument("trajectory needs at least one snapshot".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("trajectory times must increase strictly".into()));
        }
        let grid = *snapshots[0].grid();
        if snapshots.iter().any(|s| s.grid() != &grid) {
            return Err(Error::InvalidArgument("trajectory snapshots live on different grids".into()));
        }
        Ok(Self { times, snapshots, provenance, tgrid: None })
    }

    /// Snapshots at all `n_steps + 1` nodes of a uniform grid.
    pub fn on_time_grid(tgrid: TimeGrid<T>, snapshots: Vec<SpectralField<T>>, provenance: Provenance) -> Result<Self> {
        let mut t = Self::new(tgrid.nodes(), snapshots, provenance)?;
        t.tgrid = Some(tgrid);
        Ok(t)
    }

    /// Samples `f` at every node of `tgrid`.
    pub fn sample(tgrid: TimeGrid<T>, provenance: Provenance, f: impl FnMut(T) -> SpectralField<T>) -> Result<Self> {
        let snaps = tgrid.nodes().into_iter().map(f).collect();
        Self::on_time_grid(tgrid, snaps, provenance)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn snapshots(&self) -> &[SpectralField<T>] {
        &self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<SpectralField<T>> {
        self.snapshots
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn tgrid(&self) -> Option<&TimeGrid<T>> {
        self.tgrid.as_ref()
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        self.snapshots[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.snapshots.iter().all(|s| s.is_real())
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn end(&self) -> T {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &SpectralField<T> {
        self.snapshots.last().unwrap()
    }

    /// Snapshot at a node time, matched to a relative tolerance of `1e-9` of the span.
    pub fn at(&self, t: T) -> Result<&SpectralField<T>> {
        let span = (self.end() - self.start()).max(T::one());
        let tol = T::lit(1e-9) * span;
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .map(|i| &self.snapshots[i])
            .ok_or_else(|| self.out_of_range(t))
    }

    pub(crate) fn out_of_range(&self, t: T) -> Error {
        Error::TimeOutOfRange { t: t.to_f64_lossy(), start: self.start().to_f64_lossy(), end: self.end().to_f64_lossy() }
    }

    /// Supremum over snapshots of a per-snapshot norm.
    pub fn sup_norm(&self, norm: impl Fn(&SpectralField<T>) -> T) -> T {
        self.snapshots.iter().map(norm).fold(T::zero(), T::max)
    }
}
