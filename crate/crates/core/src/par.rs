//! Deterministic parallel reductions.
//!
//! Work is split into fixed-size chunks and the per-chunk results are combined
//! in chunk order, so the floating-point result does not depend on how rayon
//! schedules the chunks.

use std::ops::Range;

use rayon::prelude::*;

pub(crate) const CHUNK: usize = 128;

pub(crate) fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| f(c * chunk..((c + 1) * chunk).min(n)))
        .collect()
}

/// Running sum of a value, a gradient and a clamp flag.
#[derive(Debug, Clone)]
pub(crate) struct GradAcc {
    pub value: f64,
    pub grad: Vec<f64>,
    pub clamped: bool,
}

impl GradAcc {
    pub fn new(n: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; n],
            clamped: false,
        }
    }

    pub fn merge(mut self, other: &GradAcc) -> Self {
        self.value += other.value;
        self.grad
            .iter_mut()
            .zip(&other.grad)
            .for_each(|(a, b)| *a += b);
        self.clamped |= other.clamped;
        self
    }

    pub fn sum(n: usize, parts: Vec<GradAcc>) -> GradAcc {
        parts.iter().fold(GradAcc::new(n), |acc, p| acc.merge(p))
    }
}
