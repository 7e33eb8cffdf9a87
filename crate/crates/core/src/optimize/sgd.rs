use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{MpfError, Result};
use crate::rng::MpfRng;

/// Learning rate interpolated linearly from `start` to `end` over all updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub start: f64,
    pub end: f64,
}

impl AnnealSchedule {
    pub fn constant(rate: f64) -> Self {
        Self {
            start: rate,
            end: rate,
        }
    }

    pub fn rate(&self, step: usize, total: usize) -> f64 {
        if total <= 1 {
            return self.start;
        }
        let t = step as f64 / (total - 1) as f64;
        self.start + (self.end - self.start) * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub epochs: usize,
    pub minibatch: usize,
}

#[derive(Debug, Clone)]
pub struct SgdResult {
    pub theta: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Runs `epochs` passes over shuffled minibatches of `0..n_rows`.
///
/// `update(θ, batch, η, rng)` returns the new parameters.
pub fn sgd_anneal<F>(
    mut update: F,
    theta0: Vec<f64>,
    schedule: AnnealSchedule,
    n_rows: usize,
    cfg: &SgdConfig,
    rng: &mut MpfRng,
) -> Result<SgdResult>
where
    F: FnMut(&[f64], &[usize], f64, &mut MpfRng) -> Vec<f64>,
{
    if !(schedule.start > 0.0 && schedule.end > 0.0) {
        return Err(MpfError::InvalidArgument(
            "learning-rate endpoints must be positive".into(),
        ));
    }
    if cfg.minibatch == 0 || n_rows == 0 {
        return Err(MpfError::InvalidArgument(
            "minibatch size and row count must be positive".into(),
        ));
    }
    let per_epoch = n_rows.div_ceil(cfg.minibatch);
    let total = per_epoch * cfg.epochs;
    let mut order: Vec<usize> = (0..n_rows).collect();
    let mut theta = theta0;
    let mut rates = Vec::with_capacity(total);
    let mut step = 0;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.minibatch) {
            let eta = schedule.rate(step, total);
            theta = update(&theta, batch, eta, rng);
            if let Some(bad) = theta.iter().position(|v| !v.is_finite()) {
                return Err(MpfError::NonFinite(format!(
                    "parameter {bad} after update {step} (rate {eta})"
                )));
            }
            rates.push(eta);
            step += 1;
        }
    }
    Ok(SgdResult { theta, rates })
}
