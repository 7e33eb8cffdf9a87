use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{MpfError, Result};
use crate::models::{ContinuousEnergy, IsingModel, QuadraticEnergy};
use crate::oracle::model_distribution;
use crate::rng::{derived, seeded, MpfRng};
use crate::samplers::{gibbs_chain, hmc_sample, leapfrog, GibbsConfig, HmcConfig};
use crate::verify::{max_of, min_of, Bound, Metric, SuiteReport};

const GIBBS_SAMPLES: usize = 20_000;
const HMC_CHAINS: usize = 4000;
const DRIFT_TRAJECTORIES: usize = 2000;

/// A function of the final state whose mean is compared with its target.
type Statistic = fn(&[f64]) -> f64;

fn gibbs_max_z() -> Result<f64> {
    let mut rng = seeded(0x6769_6262);
    let d = 4;
    let model = IsingModel::from_packed(
        d,
        (0..IsingModel::n_params_for(d))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )?;
    let p = model_distribution(&model)?;
    let cfg = GibbsConfig {
        burn_in: 100,
        thin: 20,
    };
    let chain = gibbs_chain(&model, GIBBS_SAMPLES, &cfg, &mut rng);
    let mut counts = vec![0usize; 1 << d];
    for x in &chain {
        counts[x.encode()?] += 1;
    }
    let n = GIBBS_SAMPLES as f64;
    Ok(max_of(counts.iter().zip(p.probs()).map(|(&c, &pi)| {
        let sd = (pi * (1.0 - pi) / n).sqrt();
        (c as f64 / n - pi).abs() / sd
    })))
}

fn gaussian() -> Result<(QuadraticEnergy, DMatrix<f64>)> {
    let a = vec![1.0, 0.6, 0.6, 2.0];
    let cov = DMatrix::from_row_slice(2, 2, &a)
        .try_inverse()
        .ok_or(MpfError::Singular)?;
    Ok((QuadraticEnergy::new(2, a)?, cov))
}

fn normal2(rng: &mut MpfRng) -> DVector<f64> {
    DVector::from_fn(2, |_, _| rng.sample(StandardNormal))
}

/// Largest |z| over the means and second moments of independent HMC chains.
fn hmc_moment_z(energy: &QuadraticEnergy, cov: &DMatrix<f64>) -> Result<f64> {
    let cfg = HmcConfig {
        leapfrog_steps: 10,
        step_size: 0.15,
        trajectories_per_call: 30,
    };
    let finals = (0..HMC_CHAINS)
        .into_par_iter()
        .map(|c| {
            let mut rng = derived(0x686d_6331, c as u64);
            let x0 = normal2(&mut rng);
            hmc_sample(energy, x0.as_slice(), &cfg, &mut rng).map(|o| o.x)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = HMC_CHAINS as f64;
    let stats: [(Statistic, f64); 5] = [
        (|x| x[0], 0.0),
        (|x| x[1], 0.0),
        (|x| x[0] * x[0], cov[(0, 0)]),
        (|x| x[1] * x[1], cov[(1, 1)]),
        (|x| x[0] * x[1], cov[(0, 1)]),
    ];
    Ok(max_of(stats.iter().map(|(f, target)| {
        let v: Vec<f64> = finals.iter().map(|x| f(x)).collect();
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean - target).abs() / (var / n).sqrt()
    })))
}

/// Mean |ΔH| over leapfrog trajectories of fixed duration 2 from exact draws.
fn mean_drift(energy: &QuadraticEnergy, chol: &DMatrix<f64>, step: f64) -> f64 {
    let steps = (2.0 / step).round() as usize;
    let total: f64 = (0..DRIFT_TRAJECTORIES)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived(0x6472_6966, t as u64);
            let mut x = (chol * normal2(&mut rng)).as_slice().to_vec();
            let mut v = normal2(&mut rng).as_slice().to_vec();
            let h0 = energy.energy(&x) + 0.5 * v.iter().map(|a| a * a).sum::<f64>();
            match leapfrog(energy, &mut x, &mut v, steps, step) {
                Some(e) => (e + 0.5 * v.iter().map(|a| a * a).sum::<f64>() - h0).abs(),
                None => f64::NAN,
            }
        })
        .sum();
    total / DRIFT_TRAJECTORIES as f64
}

pub(crate) fn samplers() -> Result<SuiteReport> {
    let gibbs = gibbs_max_z()?;
    let (energy, cov) = gaussian()?;
    let hmc = hmc_moment_z(&energy, &cov)?;
    let chol = cov.clone().cholesky().ok_or(MpfError::Singular)?.l();
    let drifts: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| mean_drift(&energy, &chol, h))
        .collect();
    let orders: Vec<f64> = drifts.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(SuiteReport {
        metrics: vec![
            Metric::new("Gibbs max |z| over states", gibbs, Bound::AtMost(4.0)),
            Metric::new("HMC max |z| over moments", hmc, Bound::AtMost(3.0)),
            Metric::new("min drift order", min_of(orders.iter().copied()), Bound::AtLeast(1.5)),
            Metric::new("max drift order", max_of(orders.iter().copied()), Bound::AtMost(2.5)),
        ],
        detail: format!(
            "Gibbs d = 4, {GIBBS_SAMPLES} samples thinned by 20; HMC {HMC_CHAINS} chains on a 2-D Gaussian; mean |ΔH| at h = 0.2, 0.1, 0.05: {drifts:?}"
        ),
    })
}
