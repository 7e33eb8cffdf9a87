use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MpfError, Result};
use crate::models::ContinuousEnergy;
use crate::rng::MpfRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmcConfig {
    pub leapfrog_steps: usize,
    pub step_size: f64,
    pub trajectories_per_call: usize,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            leapfrog_steps: 10,
            step_size: 0.1,
            trajectories_per_call: 1,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.leapfrog_steps == 0 || self.trajectories_per_call == 0 || !(self.step_size > 0.0) {
            return Err(MpfError::InvalidArgument(format!(
                "invalid HMC configuration {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct HmcOutcome {
    pub x: Vec<f64>,
    pub accepted: usize,
    /// Trajectories rejected because the energy became non-finite.
    pub divergent: usize,
    /// `H(end) - H(start)` for every trajectory that stayed finite.
    pub delta_h: Vec<f64>,
}

/// Leapfrog integration of `ẋ = v`, `v̇ = -∇E`. Returns the final energy, or
/// `None` if the trajectory left the region where `E` is finite.
pub fn leapfrog<E: ContinuousEnergy + ?Sized>(
    energy: &E,
    x: &mut [f64],
    v: &mut [f64],
    steps: usize,
    step_size: f64,
) -> Option<f64> {
    let mut g = vec![0.0; x.len()];
    energy.state_grad(x, &mut g);
    for (vi, gi) in v.iter_mut().zip(&g) {
        *vi -= 0.5 * step_size * gi;
    }
    let mut e = f64::NAN;
    for s in 0..steps {
        for (xi, vi) in x.iter_mut().zip(v.iter()) {
            *xi += step_size * vi;
        }
        e = energy.state_grad(x, &mut g);
        if !e.is_finite() || g.iter().any(|gi| !gi.is_finite()) {
            return None;
        }
        let scale = if s + 1 == steps { 0.5 } else { 1.0 };
        for (vi, gi) in v.iter_mut().zip(&g) {
            *vi -= scale * step_size * gi;
        }
    }
    Some(e)
}

/// Runs `trajectories_per_call` Metropolis-corrected HMC trajectories from `x0`.
pub fn hmc_sample<E: ContinuousEnergy + ?Sized>(
    energy: &E,
    x0: &[f64],
    cfg: &HmcConfig,
    rng: &mut MpfRng,
) -> Result<HmcOutcome> {
    cfg.validate()?;
    let mut x = x0.to_vec();
    let mut e = energy.energy(&x);
    if !e.is_finite() {
        return Err(MpfError::NonFinite(
            "energy at the HMC starting point".into(),
        ));
    }
    let mut out = HmcOutcome {
        x: Vec::new(),
        accepted: 0,
        divergent: 0,
        delta_h: Vec::with_capacity(cfg.trajectories_per_call),
    };
    let mut x1 = vec![0.0; x.len()];
    for _ in 0..cfg.trajectories_per_call {
        let mut v: Vec<f64> = (0..x.len()).map(|_| rng.sample(StandardNormal)).collect();
        let h0 = e + 0.5 * v.iter().map(|a| a * a).sum::<f64>();
        x1.copy_from_slice(&x);
        let end = leapfrog(energy, &mut x1, &mut v, cfg.leapfrog_steps, cfg.step_size);
        let u: f64 = rng.random();
        let Some(e1) = end else {
            out.divergent += 1;
            continue;
        };
        let dh = e1 + 0.5 * v.iter().map(|a| a * a).sum::<f64>() - h0;
        out.delta_h.push(dh);
        if u < (-dh).exp() {
            x.copy_from_slice(&x1);
            e = e1;
            out.accepted += 1;
        }
    }
    out.x = x;
    Ok(out)
}
