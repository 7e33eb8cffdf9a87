use std::collections::BTreeMap;

use anyhow::bail;
use mpf_core::models::{ica_loglik, EnergyModel};
use mpf_core::oracle::{exact_loglik, pairwise_moments};
use mpf_core::rng::derived;
use mpf_core::samplers::sample_model;
use mpf_core::{Dataset, ModelParams, ENUMERATION_CAP};
use serde::Serialize;

/// Samples per model when moments cannot be enumerated.
const MOMENT_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measured {
    pub value: f64,
    pub mode: Mode,
}

impl Measured {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            mode: Mode::Exact,
        }
    }
}

pub type Metrics = BTreeMap<&'static str, Measured>;

/// Unique parameters of a model: the upper triangle with diagonal for Ising,
/// the flat parameter vector otherwise.
fn unique_params(p: &ModelParams) -> anyhow::Result<Vec<f64>> {
    Ok(match p {
        ModelParams::Ising { .. } => p.to_ising()?.packed().to_vec(),
        ModelParams::Rbm { .. } => p.to_rbm()?.weights().to_vec(),
        ModelParams::Ica { .. } => {
            mpf_core::models::ContinuousEnergy::params(&p.to_ica()?).to_vec()
        }
        ModelParams::Hopfield { .. } => p.to_hopfield()?.to_params(),
    })
}

fn binary_model(p: &ModelParams) -> anyhow::Result<Option<Box<dyn EnergyModel>>> {
    Ok(match p {
        ModelParams::Ising { .. } => Some(Box::new(p.to_ising()?)),
        ModelParams::Rbm { .. } => Some(Box::new(p.to_rbm()?)),
        _ => None,
    })
}

fn shape(p: &ModelParams) -> (usize, usize) {
    match p {
        ModelParams::Ising { d, .. }
        | ModelParams::Ica { d, .. }
        | ModelParams::Hopfield { d, .. } => (*d, 0),
        ModelParams::Rbm { d, n_hidden, .. } => (*d, *n_hidden),
    }
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len().max(1) as f64
}

/// `⟨x_i x_j⟩` for `i < j`, enumerated when possible and sampled otherwise.
fn moments(model: &dyn EnergyModel, seed: u64, stream: u64) -> anyhow::Result<(Vec<f64>, Mode)> {
    let d = model.dim();
    let (full, mode) = if d <= ENUMERATION_CAP {
        (pairwise_moments(model)?, Mode::Exact)
    } else {
        let (rows, _) = sample_model(model, MOMENT_SAMPLES, &mut derived(seed, stream))?;
        let mut m = vec![0.0; d * d];
        for x in &rows {
            let b = x.bits();
            for i in 0..d {
                for j in 0..d {
                    m[i * d + j] += (b[i] & b[j]) as f64;
                }
            }
        }
        m.iter_mut().for_each(|v| *v /= rows.len() as f64);
        (m, Mode::Sampled)
    };
    let upper = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .map(|(i, j)| full[i * d + j])
        .collect();
    Ok((upper, mode))
}

/// Error metrics of `estimate` against `truth`, plus the log-likelihood of
/// `data` under `estimate` when it can be computed exactly.
pub fn compare(
    truth: Option<&ModelParams>,
    estimate: &ModelParams,
    data: Option<&Dataset>,
    seed: u64,
) -> anyhow::Result<Metrics> {
    let mut out = Metrics::new();
    if let Some(truth) = truth {
        if truth.kind() != estimate.kind() {
            bail!(crate::UsageError(format!(
                "truth is a {} model but the estimate is a {} model",
                truth.kind(),
                estimate.kind()
            )));
        }
        if shape(truth) != shape(estimate) {
            bail!(crate::UsageError(format!(
                "dimension mismatch between truth {:?} and estimate {:?}",
                shape(truth),
                shape(estimate)
            )));
        }
        out.insert(
            "mse_J",
            Measured::exact(mse(&unique_params(truth)?, &unique_params(estimate)?)),
        );
        if let (Some(t), Some(e)) = (binary_model(truth)?, binary_model(estimate)?) {
            let (mt, mode_t) = moments(t.as_ref(), seed, 0)?;
            let (me, mode_e) = moments(e.as_ref(), seed, 1)?;
            let mode = if mode_t == Mode::Exact && mode_e == Mode::Exact {
                Mode::Exact
            } else {
                Mode::Sampled
            };
            out.insert(
                "corr_err",
                Measured {
                    value: mse(&mt, &me),
                    mode,
                },
            );
        }
    }
    if let Some(data) = data {
        let loglik = match estimate {
            ModelParams::Ica { .. } => Some(ica_loglik(&estimate.to_ica()?, data)?.0),
            _ => match binary_model(estimate)? {
                Some(m) if m.dim() <= ENUMERATION_CAP => Some(exact_loglik(m.as_ref(), data)?),
                _ => None,
            },
        };
        if let Some(v) = loglik {
            out.insert("exact_loglik", Measured::exact(v));
        }
        if let ModelParams::Hopfield { .. } = estimate {
            let net = estimate.to_hopfield()?;
            let rows = data.binary_rows()?;
            let mut fixed = 0;
            for x in rows {
                if net.is_fixed_point(x.bits())? {
                    fixed += 1;
                }
            }
            out.insert(
                "fixed_fraction",
                Measured::exact(fixed as f64 / rows.len().max(1) as f64),
            );
        }
    }
    Ok(out)
}
