use std::fmt::Debug;

use rand::Rng;

use crate::error::{MpfError, Result};
use crate::rng::MpfRng;

/// A connectivity distribution `g(· ← x)` that can be sampled and evaluated.
pub trait Proposal: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Draws a state connected to `from`.
    fn propose(&self, from: &[u8], rng: &mut MpfRng) -> Vec<u8>;

    /// `g(to ← from)`.
    fn density(&self, to: &[u8], from: &[u8]) -> f64;
}

/// Flips one uniformly chosen bit.
#[derive(Debug, Clone, Copy)]
pub struct UniformBitFlip {
    d: usize,
}

impl UniformBitFlip {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(MpfError::InvalidArgument(
                "dimension must be positive".into(),
            ));
        }
        Ok(Self { d })
    }
}

impl Proposal for UniformBitFlip {
    fn dim(&self) -> usize {
        self.d
    }

    fn propose(&self, from: &[u8], rng: &mut MpfRng) -> Vec<u8> {
        let mut x = from.to_vec();
        x[rng.random_range(0..self.d)] ^= 1;
        x
    }

    fn density(&self, to: &[u8], from: &[u8]) -> f64 {
        let diff = to.iter().zip(from).filter(|(a, b)| a != b).count();
        if diff == 1 {
            1.0 / self.d as f64
        } else {
            0.0
        }
    }
}

/// Flips every bit independently: `0 → 1` with probability `up`, `1 → 0`
/// with probability `down`. Not symmetric unless `up == down`.
#[derive(Debug, Clone, Copy)]
pub struct IndependentFlip {
    d: usize,
    up: f64,
    down: f64,
}

impl IndependentFlip {
    pub fn new(d: usize, up: f64, down: f64) -> Result<Self> {
        if !(up > 0.0 && up < 1.0 && down > 0.0 && down < 1.0) {
            return Err(MpfError::InvalidArgument(format!(
                "flip probabilities must lie in (0, 1), got {up} and {down}"
            )));
        }
        Ok(Self { d, up, down })
    }
}

impl Proposal for IndependentFlip {
    fn dim(&self) -> usize {
        self.d
    }

    fn propose(&self, from: &[u8], rng: &mut MpfRng) -> Vec<u8> {
        from.iter()
            .map(|&b| {
                let p = if b == 0 { self.up } else { self.down };
                if rng.random::<f64>() < p {
                    1 - b
                } else {
                    b
                }
            })
            .collect()
    }

    fn density(&self, to: &[u8], from: &[u8]) -> f64 {
        to.iter()
            .zip(from)
            .map(|(&t, &f)| {
                let p = if f == 0 { self.up } else { self.down };
                if t != f {
                    p
                } else {
                    1.0 - p
                }
            })
            .product()
    }
}
