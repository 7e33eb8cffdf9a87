use rand::RngCore;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, MpfError, Result};
use crate::flowcore::{clamped_exp, FlowObjective};
use crate::models::ContinuousEnergy;
use crate::optimize::{lbfgs_minimize, OptimizerConfig};
use crate::rng::{derived, MpfRng};
use crate::samplers::{hmc_sample, HmcConfig};
use crate::statespace::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PmpfConfig {
    pub outer_iters: usize,
    pub inner_descent_steps: usize,
    pub hmc: HmcConfig,
    /// Number of persistent particles; `None` uses one per data row.
    pub particle_count: Option<usize>,
    /// Standard deviation of the isotropic Gaussian the particles start from.
    pub init_std: f64,
    /// Keep a copy of the particle set in every trace entry.
    pub record_particles: bool,
}

impl Default for PmpfConfig {
    fn default() -> Self {
        Self {
            outer_iters: 50,
            inner_descent_steps: 10,
            hmc: HmcConfig::default(),
            particle_count: None,
            init_std: 1.0,
            record_particles: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PmpfStep {
    pub iter: usize,
    /// Objective at the end of the inner descent; it starts at exactly 1.
    pub k: f64,
    pub acceptance: f64,
    pub divergent: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct PmpfResult<M> {
    pub model: M,
    pub trace: Vec<PmpfStep>,
    pub particles: Vec<Vec<f64>>,
}

/// `K^n(θ) = [Σ_D w exp(½ΔE)] · [mean_S exp(-½ΔE)]`, `ΔE = E(·;θ) - E(·;θ^{n-1})`,
/// where `reference` carries `θ^{n-1}` and `particles` are the samples `S^n`.
pub fn pmpf_objective<M: ContinuousEnergy + Clone>(
    reference: &M,
    theta: &[f64],
    data: &Dataset,
    particles: &[Vec<f64>],
) -> Result<FlowObjective> {
    check_dim(reference.dim(), data.dim())?;
    if particles.is_empty() {
        return Err(MpfError::InvalidArgument("no particles".into()));
    }
    let mut current = reference.clone();
    current.set_params(theta)?;
    let np = theta.len();
    let mut clamped = false;

    let mut a = 0.0;
    let mut grad_a = vec![0.0; np];
    for (j, x) in data.continuous_rows()?.iter().enumerate() {
        let w = data.weight(j);
        let t = clamped_exp(
            0.5 * (current.energy(x) - reference.energy(x)),
            &mut clamped,
        );
        a += w * t;
        current.add_param_grad(x, 0.5 * w * t, &mut grad_a);
    }
    let s = particles.len() as f64;
    let mut b = 0.0;
    let mut grad_b = vec![0.0; np];
    for x in particles {
        let t = clamped_exp(
            -0.5 * (current.energy(x) - reference.energy(x)),
            &mut clamped,
        );
        b += t / s;
        current.add_param_grad(x, -0.5 * t / s, &mut grad_b);
    }
    let grad = grad_a
        .iter()
        .zip(&grad_b)
        .map(|(ga, gb)| ga * b + a * gb)
        .collect();
    Ok(FlowObjective {
        value: a * b,
        grad,
        clamped,
    })
}

/// Persistent flow fitting: particles are refreshed by HMC under the previous
/// parameters, then `K^n` is descended for a few L-BFGS steps.
pub fn pmpf_fit<M: ContinuousEnergy + Clone>(
    model: M,
    data: &Dataset,
    cfg: &PmpfConfig,
    rng: &mut MpfRng,
) -> Result<PmpfResult<M>> {
    check_dim(model.dim(), data.dim())?;
    cfg.hmc.validate()?;
    if cfg.outer_iters == 0 || cfg.inner_descent_steps == 0 || cfg.particle_count == Some(0) {
        return Err(MpfError::InvalidArgument(
            "iteration and particle counts must be at least 1".into(),
        ));
    }
    let d = model.dim();
    let count = cfg.particle_count.unwrap_or(data.len());
    let init = Normal::new(0.0, cfg.init_std)
        .map_err(|e| MpfError::InvalidArgument(format!("init_std: {e}")))?;
    let mut particles: Vec<Vec<f64>> = (0..count)
        .map(|_| (0..d).map(|_| init.sample(rng)).collect())
        .collect();

    let mut model = model;
    let mut trace = Vec::with_capacity(cfg.outer_iters);
    let opt = OptimizerConfig {
        max_iters: cfg.inner_descent_steps,
        grad_tol: 1e-12,
        ..OptimizerConfig::default()
    };
    for iter in 0..cfg.outer_iters {
        let reference = model.clone();
        let base = rng.next_u64();
        let moved: Vec<Result<_>> = particles
            .par_iter()
            .enumerate()
            .map(|(p, x)| {
                let mut prng = derived(base, p as u64);
                hmc_sample(&reference, x, &cfg.hmc, &mut prng)
            })
            .collect();
        let mut accepted = 0;
        let mut divergent = 0;
        for (slot, out) in particles.iter_mut().zip(moved) {
            let out = out?;
            accepted += out.accepted;
            divergent += out.divergent;
            *slot = out.x;
        }
        let acceptance = accepted as f64 / (count * cfg.hmc.trajectories_per_call) as f64;

        let theta0 = reference.params().to_vec();
        let res = lbfgs_minimize(
            |th, g| match pmpf_objective(&reference, th, data, &particles) {
                Ok(o) => {
                    g.copy_from_slice(&o.grad);
                    o.value
                }
                Err(_) => f64::NAN,
            },
            &theta0,
            &opt,
        )?;
        model.set_params(&res.x)?;
        trace.push(PmpfStep {
            iter,
            k: res.f,
            acceptance,
            divergent,
            particles: cfg.record_particles.then(|| particles.clone()),
        });
    }
    Ok(PmpfResult {
        model,
        trace,
        particles,
    })
}
