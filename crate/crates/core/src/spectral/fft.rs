use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::scalar::{Cplx, Real};

/// Forward/inverse plan pair of one length. Unnormalised in both directions.
#[derive(Clone)]
pub struct FftPair<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    len: usize,
}

impl<T: Real> FftPair<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len), len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Transforms `buf` in place; `buf.len()` may be any multiple of `len`.
    pub fn forward(&self, buf: &mut [Cplx<T>]) {
        self.forward.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Cplx<T>]) {
        self.inverse.process(buf);
    }
}
