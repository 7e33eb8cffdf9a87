use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, MpfError, Result};
use crate::models::{EnergyModel, RbmModel};
use crate::optimize::{sgd_anneal, AnnealSchedule, SgdConfig};
use crate::rng::{derived, MpfRng};
use crate::samplers::{gibbs_sweep, rbm_gibbs_step};
use crate::statespace::{BinaryState, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdConfig {
    /// Gibbs sweeps per negative sample.
    pub k: usize,
    pub eta_start: f64,
    pub eta_end: f64,
    pub minibatch: usize,
    pub epochs: usize,
}

impl CdConfig {
    /// Rate annealed from `3/d` to `0.1/d`, minibatches of 100.
    pub fn for_dim(d: usize, k: usize) -> Self {
        let d = d.max(1) as f64;
        Self {
            k,
            eta_start: 3.0 / d,
            eta_end: 0.1 / d,
            minibatch: 100,
            epochs: 50,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || !(self.eta_start > 0.0 && self.eta_end > 0.0) || self.minibatch == 0 {
            return Err(MpfError::InvalidArgument(format!(
                "invalid CD configuration {self:?}"
            )));
        }
        Ok(())
    }
}

/// `Σ_b w_b ∂E(x_b) - Σ_b w_b ∂E(x_b^(k))` for a batch, with weights
/// normalised within the batch. Descending along it is the CD update.
fn phase_gap<M, S>(
    model: &M,
    rows: &[(&BinaryState, f64)],
    batch: &[usize],
    base_seed: u64,
    step: S,
) -> Vec<f64>
where
    M: EnergyModel,
    S: Fn(&M, &mut [u8], &mut MpfRng) + Sync,
{
    let np = model.n_params();
    let total: f64 = batch.iter().map(|&b| rows[b].1).sum();
    let parts: Vec<Vec<f64>> = batch
        .par_iter()
        .enumerate()
        .map(|(slot, &b)| {
            let (x, w) = rows[b];
            let w = w / total;
            let mut g = vec![0.0; np];
            model.add_param_grad(x, w, &mut g);
            let mut chain_rng = derived(base_seed, slot as u64);
            let mut y = x.bits().to_vec();
            step(model, &mut y, &mut chain_rng);
            model.add_param_grad(&y, -w, &mut g);
            g
        })
        .collect();
    let mut g = vec![0.0; np];
    for p in parts {
        g.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
    }
    g
}

/// The CD gap for a single batch, exposed for checking the update.
pub fn cd_phase_gap<M: EnergyModel>(
    model: &M,
    data: &Dataset,
    k: usize,
    rng: &mut MpfRng,
) -> Result<Vec<f64>> {
    check_dim(model.dim(), data.dim())?;
    let rows = data.weighted_binary_rows()?;
    let batch: Vec<usize> = (0..rows.len()).collect();
    let seed = rng.next_u64();
    Ok(phase_gap(model, &rows, &batch, seed, |m, y, r| {
        for _ in 0..k {
            gibbs_sweep(m, y, r);
        }
    }))
}

fn run<M, S>(init: M, data: &Dataset, cfg: &CdConfig, rng: &mut MpfRng, step: S) -> Result<M>
where
    M: EnergyModel + Clone,
    S: Fn(&M, &mut [u8], &mut MpfRng) + Sync + Copy,
{
    cfg.validate()?;
    check_dim(init.dim(), data.dim())?;
    let rows = data.weighted_binary_rows()?;
    let mut work = init.clone();
    let res = sgd_anneal(
        |theta, batch, eta, rng| {
            if work.set_params(theta).is_err() {
                return vec![f64::NAN; theta.len()];
            }
            let gap = phase_gap(&work, &rows, batch, rng.next_u64(), step);
            theta.iter().zip(&gap).map(|(t, g)| t - eta * g).collect()
        },
        init.params().to_vec(),
        AnnealSchedule {
            start: cfg.eta_start,
            end: cfg.eta_end,
        },
        rows.len(),
        &SgdConfig {
            epochs: cfg.epochs,
            minibatch: cfg.minibatch,
        },
        rng,
    )?;
    let mut model = init;
    model.set_params(&res.theta)?;
    Ok(model)
}

/// Contrastive divergence with `k` ascending single-site Gibbs sweeps
/// started at each minibatch row.
pub fn cd_fit<M: EnergyModel + Clone>(
    init: M,
    data: &Dataset,
    cfg: &CdConfig,
    rng: &mut MpfRng,
) -> Result<M> {
    let k = cfg.k;
    run(
        init,
        data,
        cfg,
        rng,
        move |m: &M, y: &mut [u8], r: &mut MpfRng| {
            for _ in 0..k {
                gibbs_sweep(m, y, r);
            }
        },
    )
}

/// Contrastive divergence for the RBM, resampling the hidden layer exactly
/// at every half step.
pub fn cd_fit_rbm(
    init: RbmModel,
    data: &Dataset,
    cfg: &CdConfig,
    rng: &mut MpfRng,
) -> Result<RbmModel> {
    let k = cfg.k;
    run(
        init,
        data,
        cfg,
        rng,
        move |m: &RbmModel, y: &mut [u8], r: &mut MpfRng| {
            for _ in 0..k {
                rbm_gibbs_step(m, y, r);
            }
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::IsingModel;
    use crate::oracle::model_distribution;
    use crate::rng::seeded;
    use crate::samplers::conditional_one;
    use crate::samplers::exact_sample;
    use crate::statespace::decode_bits;
    use rand::Rng;

    #[test]
    fn phases_cancel_at_model_distribution() {
        // push p^(∞) exactly through one ascending Gibbs sweep; the negative
        // phase statistics must equal the positive ones
        let mut rng = seeded(2);
        let d = 6;
        let m = IsingModel::from_packed(
            d,
            (0..IsingModel::n_params_for(d))
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap();
        let p = model_distribution(&m).unwrap().probs().to_vec();
        let mut q = p.clone();
        for n in 0..d {
            let mut next = vec![0.0; q.len()];
            for i in 0..q.len() {
                let x = decode_bits(i, d);
                let on = conditional_one(&m, &x, n);
                next[i | 1 << n] += q[i] * on;
                next[i & !(1 << n)] += q[i] * (1.0 - on);
            }
            q = next;
        }
        let np = m.n_params();
        let mut gap = vec![0.0; np];
        for i in 0..1 << d {
            let x = decode_bits(i, d);
            m.add_param_grad(&x, p[i], &mut gap);
            m.add_param_grad(&x, -q[i], &mut gap);
        }
        assert!(gap.iter().all(|g| g.abs() < 1e-12), "{gap:?}");

        // the sampled gap through the real code path is small as well
        let rows = exact_sample(&model_distribution(&m).unwrap(), 20_000, &mut rng).unwrap();
        let data = Dataset::binary(d, rows).unwrap();
        let g = cd_phase_gap(&m, &data, 1, &mut rng).unwrap();
        assert!(g.iter().all(|v| v.abs() < 0.05), "{g:?}");
    }

    #[test]
    fn one_unit_update_lowers_datum_energy() {
        // data = {1}; J = 0, so the Gibbs successor is 0 or 1 with equal odds
        let data = Dataset::binary(1, vec![BinaryState::ones(1)]).unwrap();
        let cfg = CdConfig {
            k: 1,
            eta_start: 0.1,
            eta_end: 0.1,
            minibatch: 1,
            epochs: 50,
        };
        let m = cd_fit(IsingModel::zeros(1), &data, &cfg, &mut seeded(0)).unwrap();
        // E(1) = J_00 must have decreased
        assert!(m.get(0, 0) < 0.0);
    }

    #[test]
    fn rbm_cd_runs_and_is_deterministic() {
        let mut rng = seeded(4);
        let rows = (0..200)
            .map(|_| BinaryState::new((0..4).map(|_| rng.random_range(0..2)).collect()).unwrap())
            .collect();
        let data = Dataset::binary(4, rows).unwrap();
        let cfg = CdConfig::for_dim(4, 1);
        let init = RbmModel::new(3, 4, (0..12).map(|i| 0.01 * i as f64).collect()).unwrap();
        let a = cd_fit_rbm(init.clone(), &data, &cfg, &mut seeded(1)).unwrap();
        let b = cd_fit_rbm(init, &data, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(a, b);
    }
}
