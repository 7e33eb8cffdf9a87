use rayon::prelude::*;

use crate::error::{check_dim, MpfError, Result};
use crate::models::{sigmoid, EnergyModel};
use crate::par::{map_chunks, GradAcc, CHUNK};
use crate::statespace::{check_enumerable, decode_bits, Dataset, TabularDistribution};

/// Energies of all `2^d` states, indexed by encoding.
pub fn energy_table<M: EnergyModel + ?Sized>(model: &M) -> Result<Vec<f64>> {
    let d = model.dim();
    check_enumerable(d)?;
    let table: Vec<f64> = (0..1usize << d)
        .into_par_iter()
        .map(|i| model.energy(&decode_bits(i, d)))
        .collect();
    if let Some(i) = table.iter().position(|e| !e.is_finite()) {
        return Err(MpfError::NonFinite(format!("energy of state {i}")));
    }
    Ok(table)
}

fn log_sum_exp_neg(energies: &[f64]) -> f64 {
    let min = energies.iter().fold(f64::INFINITY, |m, &e| m.min(e));
    let s: f64 = energies.iter().map(|e| (min - e).exp()).sum();
    s.ln() - min
}

/// `log Σ_x exp(-E(x))`.
pub fn log_partition<M: EnergyModel + ?Sized>(model: &M) -> Result<f64> {
    Ok(log_sum_exp_neg(&energy_table(model)?))
}

pub fn partition_function<M: EnergyModel + ?Sized>(model: &M) -> Result<f64> {
    Ok(log_partition(model)?.exp())
}

pub fn model_distribution<M: EnergyModel + ?Sized>(model: &M) -> Result<TabularDistribution> {
    let table = energy_table(model)?;
    let log_z = log_sum_exp_neg(&table);
    let probs = table.iter().map(|e| (-e - log_z).exp()).collect();
    Ok(TabularDistribution::from_probs_unchecked(
        model.dim(),
        probs,
    ))
}

/// Mean log-likelihood of the rows (respecting weights).
pub fn exact_loglik<M: EnergyModel + ?Sized>(model: &M, data: &Dataset) -> Result<f64> {
    check_dim(model.dim(), data.dim())?;
    let log_z = log_partition(model)?;
    let rows = data.weighted_binary_rows()?;
    Ok(rows
        .iter()
        .map(|(x, w)| w * (-model.energy(x) - log_z))
        .sum())
}

/// Negative mean log-likelihood and its parameter gradient
/// `Σ_D w ∂E - Σ_x p(x) ∂E`.
pub fn exact_nll_and_grad<M: EnergyModel + ?Sized>(
    model: &M,
    data: &Dataset,
) -> Result<(f64, Vec<f64>)> {
    let d = model.dim();
    check_dim(d, data.dim())?;
    check_enumerable(d)?;
    let np = model.n_params();
    let (log_z, mut grad) = match model.enumerated_expectation() {
        Some((log_z, mut mean)) => {
            if !log_z.is_finite() || mean.iter().any(|v| !v.is_finite()) {
                return Err(MpfError::NonFinite("log partition function".into()));
            }
            mean.iter_mut().for_each(|v| *v = -*v);
            (log_z, mean)
        }
        None => {
            let table = energy_table(model)?;
            let log_z = log_sum_exp_neg(&table);
            let parts = map_chunks(table.len(), CHUNK * 8, |range| {
                let mut acc = GradAcc::new(np);
                for i in range {
                    let p = (-table[i] - log_z).exp();
                    if p > 0.0 {
                        model.add_param_grad(&decode_bits(i, d), -p, &mut acc.grad);
                    }
                }
                acc
            });
            (log_z, GradAcc::sum(np, parts).grad)
        }
    };
    let mut value = 0.0;
    for (x, w) in data.weighted_binary_rows()? {
        value += w * model.energy(x);
        model.add_param_grad(x, w, &mut grad);
    }
    Ok((value + log_z, grad))
}

/// `⟨x_i x_j⟩` under the model, as a row-major `d x d` matrix.
pub fn pairwise_moments<M: EnergyModel + ?Sized>(model: &M) -> Result<Vec<f64>> {
    let dist = model_distribution(model)?;
    let d = model.dim();
    let probs = dist.probs();
    let parts = map_chunks(probs.len(), CHUNK * 8, |range| {
        let mut m = vec![0.0; d * d];
        for i in range {
            let p = probs[i];
            for a in 0..d {
                if i >> a & 1 == 1 {
                    for b in 0..d {
                        if i >> b & 1 == 1 {
                            m[a * d + b] += p;
                        }
                    }
                }
            }
        }
        m
    });
    let mut out = vec![0.0; d * d];
    for p in parts {
        out.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
    }
    Ok(out)
}

/// `p(x_n = 1 | x_rest)` read off the enumerated joint distribution.
pub fn exact_conditional<M: EnergyModel + ?Sized>(model: &M, x: &[u8], n: usize) -> Result<f64> {
    check_dim(model.dim(), x.len())?;
    if n >= x.len() {
        return Err(MpfError::IndexOutOfRange {
            index: n,
            limit: x.len(),
        });
    }
    let dist = model_distribution(model)?;
    let mut y = x.to_vec();
    y[n] = 1;
    let p1 = dist.probs()[crate::statespace::encode_bits(&y)];
    y[n] = 0;
    let p0 = dist.probs()[crate::statespace::encode_bits(&y)];
    if p0 + p1 > 1e-300 {
        Ok(p1 / (p0 + p1))
    } else {
        // both states are numerically impossible; fall back to energies
        let table = energy_table(model)?;
        let e1 = table[crate::statespace::encode_bits(&y) | 1 << n];
        let e0 = table[crate::statespace::encode_bits(&y)];
        Ok(sigmoid(e0 - e1))
    }
}
