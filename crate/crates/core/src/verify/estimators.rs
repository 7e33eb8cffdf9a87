use rayon::prelude::*;

use crate::baselines::{cd_fit, exact_ml_fit, ica_ml_fit, CdConfig};
use crate::error::Result;
use crate::flowcore::{fit_ising_mpf, pmpf_fit, PmpfConfig};
use crate::hopfield::{capacity_experiment, denoise_experiment, HopfieldMethod};
use crate::models::{ica_loglik, lattice_ising, IcaModel, IsingModel};
use crate::optimize::OptimizerConfig;
use crate::rng::{derived, seeded};
use crate::samplers::{sample_ica, sample_model};
use crate::statespace::Dataset;
use crate::verify::{Bound, Metric, SuiteReport};

fn mse(a: &IsingModel, b: &IsingModel) -> f64 {
    let n = a.packed().len() as f64;
    a.packed()
        .iter()
        .zip(b.packed())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        / n
}

#[derive(Debug)]
struct OrderingRun {
    mpf: f64,
    cd1: f64,
    ml: f64,
}

fn ordering_run(seed: u64) -> Result<OrderingRun> {
    let mut rng = derived(0x6f72_6465, seed);
    let truth = lattice_ising(4, 4, 10.0, &mut rng)?;
    let d = 16;
    let (samples, _) = sample_model(&truth, 20_000, &mut rng)?;
    let data = Dataset::binary(d, samples)?;
    let compact = data.compressed()?;
    let cfg = OptimizerConfig::default();
    let (mpf, _) = fit_ising_mpf(&IsingModel::zeros(d), &compact, false, &cfg)?;
    let cd1 = cd_fit(
        IsingModel::zeros(d),
        &data,
        &CdConfig::for_dim(d, 1),
        &mut rng,
    )?;
    let ml = exact_ml_fit(IsingModel::zeros(d), &compact, &cfg)?.model;
    Ok(OrderingRun {
        mpf: mse(&mpf, &truth),
        cd1: mse(&cd1, &truth),
        ml: mse(&ml, &truth),
    })
}

pub(crate) fn estimator_ordering() -> Result<SuiteReport> {
    let runs = (0..5u64)
        .into_par_iter()
        .map(ordering_run)
        .collect::<Result<Vec<_>>>()?;
    let good = runs
        .iter()
        .filter(|r| r.mpf <= r.cd1 && r.mpf <= 2.0 * r.ml)
        .count();
    let detail = runs
        .iter()
        .enumerate()
        .map(|(s, r)| format!("seed {s}: mpf {:.4} cd1 {:.4} ml {:.4}", r.mpf, r.cd1, r.ml))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(SuiteReport {
        metrics: vec![Metric::new(
            "seeds with mse(MPF) <= mse(CD-1) and <= 2 mse(ML)",
            good as f64,
            Bound::AtLeast(4.0),
        )],
        detail: format!("4x4 lattice, σ² = 10, 20000 exact samples; {detail}"),
    })
}

fn mean_for(rows: &[crate::hopfield::CurveRow], method: HopfieldMethod) -> f64 {
    rows.iter()
        .find(|r| r.method == method)
        .map_or(f64::NAN, |r| r.mean)
}

pub(crate) fn hopfield_capacity() -> Result<SuiteReport> {
    let rows = capacity_experiment(
        32,
        &[32],
        20,
        &[HopfieldMethod::Mpf, HopfieldMethod::Opr],
        0x6361_7061,
    )?;
    let mpf = mean_for(&rows, HopfieldMethod::Mpf);
    let opr = mean_for(&rows, HopfieldMethod::Opr);
    Ok(SuiteReport {
        metrics: vec![
            Metric::new("MPF fixed-point fraction", mpf, Bound::AtLeast(0.99)),
            Metric::new("OPR fixed-point fraction", opr, Bound::Below(0.5)),
        ],
        detail: "n = 32, m = 32, 20 trials".into(),
    })
}

pub(crate) fn hopfield_denoise() -> Result<SuiteReport> {
    let rows = denoise_experiment(
        64,
        13,
        &[6],
        20,
        &[HopfieldMethod::Mpf, HopfieldMethod::Per],
        0x6465_6e6f,
    )?;
    let mpf = mean_for(&rows, HopfieldMethod::Mpf);
    let per = mean_for(&rows, HopfieldMethod::Per);
    Ok(SuiteReport {
        metrics: vec![
            Metric::new("MPF exact recovery", mpf, Bound::AtLeast(0.9)),
            Metric::new(
                "MPF recovery - PER recovery",
                mpf - per,
                Bound::AtLeast(0.0),
            ),
        ],
        detail: format!("n = 64, m = 13, 6 flipped bits, 20 trials; PER recovery {per:.3}"),
    })
}

pub(crate) fn ica_parity() -> Result<SuiteReport> {
    let mut rng = seeded(0x6963_6170);
    let truth = IcaModel::new(2, vec![1.2, 0.5, -0.7, 0.9])?;
    let data = sample_ica(&truth, 10_000, &mut rng)?;
    let (ml, _) = ica_ml_fit(IcaModel::identity(2), &data, &OptimizerConfig::default())?;
    let fit = pmpf_fit(
        IcaModel::identity(2),
        &data,
        &PmpfConfig::default(),
        &mut rng,
    )?;
    let l_ml = ica_loglik(&ml, &data)?.0;
    let l_pmpf = ica_loglik(&fit.model, &data)?.0;
    let l_truth = ica_loglik(&truth, &data)?.0;
    Ok(SuiteReport {
        metrics: vec![Metric::new(
            "|loglik(ML) - loglik(PMPF)| (nats per sample)",
            (l_ml - l_pmpf).abs(),
            Bound::AtMost(0.3),
        )],
        detail: format!("K = 2, 10000 samples; ML {l_ml:.4}, PMPF {l_pmpf:.4}, truth {l_truth:.4}"),
    })
}
