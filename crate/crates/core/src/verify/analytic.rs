use rand::Rng;
use rand_distr::StandardNormal;

use crate::baselines::pl_objective;
use crate::error::Result;
use crate::flowcore::{
    fit_ising_mpf, ising_mpf, mpf_objective, pmpf_objective, rbm_mpf, ConnectivityScheme,
    MpfOptions,
};
use crate::hopfield::{hopfield_mpf_objective, HopfieldNet};
use crate::models::{
    ica_loglik, ContinuousEnergy, EnergyModel, IcaModel, IsingModel, QuadraticEnergy, RbmModel,
};
use crate::optimize::OptimizerConfig;
use crate::oracle::{
    fd_gradient, hessian_min_eig, kl_flow_check, model_distribution, rel_error, sm_limit_check,
    spectral_bound,
};
use crate::rng::{seeded, MpfRng};
use crate::statespace::{decode_bits, BinaryState, Dataset};
use crate::verify::{max_of, min_of, Bound, Metric, SuiteReport};

const INSTANCES: usize = 20;

fn normal_vec(n: usize, sd: f64, rng: &mut MpfRng) -> Vec<f64> {
    (0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn random_ising(d: usize, sd: f64, rng: &mut MpfRng) -> IsingModel {
    IsingModel::from_packed(d, normal_vec(IsingModel::n_params_for(d), sd, rng)).expect("sized")
}

fn random_state(d: usize, rng: &mut MpfRng) -> BinaryState {
    BinaryState::new((0..d).map(|_| rng.random_range(0..2u8)).collect()).expect("binary")
}

fn random_rows(d: usize, n: usize, rng: &mut MpfRng) -> Result<Dataset> {
    Dataset::binary(d, (0..n).map(|_| random_state(d, rng)).collect())
}

fn continuous_rows(k: usize, n: usize, rng: &mut MpfRng) -> Result<Dataset> {
    Dataset::continuous(k, (0..n).map(|_| normal_vec(k, 1.0, rng)).collect())
}

fn random_ica(k: usize, rng: &mut MpfRng) -> Result<IcaModel> {
    let mut j = normal_vec(k * k, 0.3, rng);
    for i in 0..k {
        j[i * k + i] += 1.0;
    }
    IcaModel::new(k, j)
}

/// Gradient of the generic objective over `J′` entries, mapped to packed
/// symmetric coordinates.
fn pack_asymmetric_grad(g: &[f64], m: &IsingModel) -> Vec<f64> {
    let d = m.dim();
    let mut out = vec![0.0; m.n_params()];
    for a in 0..d {
        for b in a..d {
            out[m.idx(a, b)] = if a == b {
                g[a * d + a]
            } else {
                g[a * d + b] + g[b * d + a]
            };
        }
    }
    out
}

pub(crate) fn gradients() -> Result<SuiteReport> {
    let mut rng = seeded(0x6772_6164);
    let mut errs = [0.0f64; 7];
    for i in 0..INSTANCES {
        let d = rng.random_range(2..=8);
        let rows = rng.random_range(1..=12);
        let data = random_rows(d, rows, &mut rng)?;

        let m = random_ising(d, 0.5, &mut rng);
        let scheme = if i % 2 == 0 {
            ConnectivityScheme::SingleBitFlip
        } else {
            ConnectivityScheme::SingleFlipPlusComplement
        };
        let opts = MpfOptions {
            epsilon_scale: 1.0,
            exclude_data_neighbors: i % 3 == 0,
        };
        let k = mpf_objective(&m, &data, &scheme, &opts)?;
        let fd = fd_gradient(
            |th| {
                IsingModel::from_packed(d, th.to_vec())
                    .and_then(|mm| mpf_objective(&mm, &data, &scheme, &opts))
                    .map_or(f64::NAN, |o| o.value)
            },
            m.packed(),
            None,
        );
        errs[0] = errs[0].max(rel_error(&k.grad, &fd));

        let jp = normal_vec(d * d, 0.5, &mut rng);
        let allflip = i % 2 == 1;
        let k = ising_mpf(&jp, d, &data, allflip)?;
        let fd = fd_gradient(
            |th| ising_mpf(th, d, &data, allflip).map_or(f64::NAN, |o| o.value),
            &jp,
            None,
        );
        errs[1] = errs[1].max(rel_error(&k.grad, &fd));

        let nh = rng.random_range(1..=4);
        let rbm = RbmModel::new(nh, d, normal_vec(nh * d, 0.5, &mut rng))?;
        let k = rbm_mpf(&rbm, &data)?;
        let fd = fd_gradient(
            |th| {
                RbmModel::new(nh, d, th.to_vec())
                    .and_then(|r| rbm_mpf(&r, &data))
                    .map_or(f64::NAN, |o| o.value)
            },
            rbm.weights(),
            None,
        );
        errs[2] = errs[2].max(rel_error(&k.grad, &fd));

        let p = normal_vec(HopfieldNet::n_params_for(d), 0.5, &mut rng);
        let net = HopfieldNet::from_params(d, &p)?;
        let k = hopfield_mpf_objective(&net, &data)?;
        let fd = fd_gradient(
            |th| {
                HopfieldNet::from_params(d, th)
                    .and_then(|n| hopfield_mpf_objective(&n, &data))
                    .map_or(f64::NAN, |o| o.value)
            },
            &p,
            None,
        );
        errs[3] = errs[3].max(rel_error(&k.flat_grad(), &fd));

        let (_, g) = pl_objective(&m, &data)?;
        let fd = fd_gradient(
            |th| {
                IsingModel::from_packed(d, th.to_vec())
                    .and_then(|mm| pl_objective(&mm, &data))
                    .map_or(f64::NAN, |o| o.0)
            },
            m.packed(),
            None,
        );
        errs[4] = errs[4].max(rel_error(&g, &fd));

        let kdim = rng.random_range(2..=4);
        let ica = random_ica(kdim, &mut rng)?;
        let cdata = continuous_rows(kdim, 10, &mut rng)?;
        let (_, g) = ica_loglik(&ica, &cdata)?;
        let fd = fd_gradient(
            |th| {
                IcaModel::new(kdim, th.to_vec())
                    .and_then(|m| ica_loglik(&m, &cdata))
                    .map_or(f64::NAN, |o| o.0)
            },
            ica.params(),
            None,
        );
        errs[5] = errs[5].max(rel_error(&g, &fd));

        let particles: Vec<Vec<f64>> = (0..10).map(|_| normal_vec(kdim, 1.0, &mut rng)).collect();
        let theta: Vec<f64> = ica
            .params()
            .iter()
            .map(|v| v + 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let k = pmpf_objective(&ica, &theta, &cdata, &particles)?;
        let fd = fd_gradient(
            |th| pmpf_objective(&ica, th, &cdata, &particles).map_or(f64::NAN, |o| o.value),
            &theta,
            None,
        );
        errs[6] = errs[6].max(rel_error(&k.grad, &fd));
    }
    let names = [
        "mpf_objective",
        "ising_mpf",
        "rbm_mpf",
        "hopfield_mpf_objective",
        "pl_objective",
        "ica_loglik",
        "pmpf_objective",
    ];
    Ok(SuiteReport {
        metrics: names
            .iter()
            .zip(errs)
            .map(|(n, e)| {
                Metric::new(
                    format!("max rel. gradient error, {n}"),
                    e,
                    Bound::Below(1e-6),
                )
            })
            .collect(),
        detail: format!("{INSTANCES} random instances per objective, d <= 8"),
    })
}

pub(crate) fn kl_flow() -> Result<SuiteReport> {
    let mut rng = seeded(0x6b6c_666c);
    let mut flow_res = Vec::new();
    let mut rate_res = Vec::new();
    for i in 0..INSTANCES {
        let d = rng.random_range(3..=8);
        let m = random_ising(d, 0.5, &mut rng);
        let n = rng.random_range(1..=((1usize << d) / 4).min(20));
        let data = random_rows(d, n, &mut rng)?;
        let scheme = if i % 2 == 0 {
            ConnectivityScheme::SingleBitFlip
        } else {
            ConnectivityScheme::SingleFlipPlusComplement
        };
        let r = kl_flow_check(&m, &data, &scheme)?;
        flow_res.push(r.flow_residual);
        rate_res.push(r.rate_rel_residual);
    }
    Ok(SuiteReport {
        metrics: vec![
            Metric::new("max |K - flow sum|", max_of(flow_res), Bound::AtMost(1e-12)),
            Metric::new(
                "max rel. |K - dKL/dt|",
                max_of(rate_res),
                Bound::AtMost(1e-4),
            ),
        ],
        detail: format!("{INSTANCES} random Ising instances, 3 <= d <= 8"),
    })
}

pub(crate) fn convexity() -> Result<SuiteReport> {
    let mut rng = seeded(0x636f_6e76);
    let mut ising = Vec::new();
    let mut hop = Vec::new();
    for i in 0..INSTANCES {
        let d = rng.random_range(2..=6);
        let data = random_rows(d, rng.random_range(1..=10), &mut rng)?;
        let m = random_ising(d, 1.0, &mut rng);
        let scheme = if i % 2 == 0 {
            ConnectivityScheme::SingleBitFlip
        } else {
            ConnectivityScheme::SingleFlipPlusComplement
        };
        let opts = MpfOptions::default();
        ising.push(hessian_min_eig(
            |th| {
                IsingModel::from_packed(d, th.to_vec())
                    .and_then(|mm| mpf_objective(&mm, &data, &scheme, &opts))
                    .map_or(vec![f64::NAN; th.len()], |o| o.grad)
            },
            m.packed(),
            None,
        )?);
        let p = normal_vec(HopfieldNet::n_params_for(d), 1.0, &mut rng);
        hop.push(hessian_min_eig(
            |th| {
                HopfieldNet::from_params(d, th)
                    .and_then(|n| hopfield_mpf_objective(&n, &data))
                    .map_or(vec![f64::NAN; th.len()], |o| o.flat_grad())
            },
            &p,
            None,
        )?);
    }
    Ok(SuiteReport {
        metrics: vec![
            Metric::new(
                "min Hessian eigenvalue, Ising",
                min_of(ising),
                Bound::AtLeast(-1e-8),
            ),
            Metric::new(
                "min Hessian eigenvalue, Hopfield",
                min_of(hop),
                Bound::AtLeast(-1e-8),
            ),
        ],
        detail: format!("{INSTANCES} random instances each, d <= 6"),
    })
}

pub(crate) fn consistency() -> Result<SuiteReport> {
    let mut rng = seeded(0x636f_6e73);
    let d = 6;
    let truth = random_ising(d, 1.0, &mut rng);
    let data = Dataset::from_distribution(&model_distribution(&truth)?)?;
    let at_truth = mpf_objective(
        &truth,
        &data,
        &ConnectivityScheme::SingleBitFlip,
        &MpfOptions::default(),
    )?;
    let grad_inf = at_truth.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let init = random_ising(d, 1.0, &mut rng);
    let cfg = OptimizerConfig::default().with_grad_tol(1e-8);
    let (fit, res) = fit_ising_mpf(&init, &data, false, &cfg)?;
    let mse = fit
        .packed()
        .iter()
        .zip(truth.packed())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / truth.n_params() as f64;
    Ok(SuiteReport {
        metrics: vec![
            Metric::new("‖∇K(θ*)‖∞", grad_inf, Bound::Below(1e-9)),
            Metric::new("mse_J after fit", mse, Bound::Below(1e-6)),
        ],
        detail: format!(
            "d = {d}, weighted full support; L-BFGS {:?} after {} iterations",
            res.status, res.iterations
        ),
    })
}

pub(crate) fn sm_limit() -> Result<SuiteReport> {
    let mut rng = seeded(0x736d_6c6d);
    let data = continuous_rows(2, 6, &mut rng)?;
    let r = sm_limit_check(&QuadraticEnergy::isotropic(2), &data, &[0.4, 0.2, 0.1], 16)?;
    let ratios = r.ratios.clone();
    Ok(SuiteReport {
        metrics: vec![
            Metric::new(
                "min error ratio ε → ε/2",
                min_of(ratios.iter().copied()),
                Bound::AtLeast(3.0),
            ),
            Metric::new(
                "max error ratio ε → ε/2",
                max_of(ratios.iter().copied()),
                Bound::AtMost(5.0),
            ),
        ],
        detail: format!(
            "E = ½‖x‖², K_SM = {:.6}, errors {:?}",
            r.k_sm,
            r.rows.iter().map(|row| row.error).collect::<Vec<_>>()
        ),
    })
}

/// Up to `count` of the lowest-energy states, pairwise at Hamming distance
/// at least 2 so that no two are directly connected.
fn low_energy_states(m: &IsingModel, count: usize) -> Result<Vec<BinaryState>> {
    let d = m.dim();
    let mut order: Vec<(f64, usize)> = (0..1usize << d)
        .map(|i| (m.energy(&decode_bits(i, d)), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<BinaryState> = Vec::new();
    for (_, i) in order {
        if out.len() == count {
            break;
        }
        let x = BinaryState::decode(i, d)?;
        if out.iter().all(|y| y.hamming(&x) >= 2) {
            out.push(x);
        }
    }
    Ok(out)
}

pub(crate) fn spectral() -> Result<SuiteReport> {
    let mut rng = seeded(0x7370_6563);
    let d = 8;
    let mut gaps = Vec::new();
    let mut lam = Vec::new();
    let mut finite = 0;
    let mut total = 0;
    for _ in 0..INSTANCES {
        let m = random_ising(d, 1.0, &mut rng);
        let n = rng.random_range(1..=5);
        let data = Dataset::binary(d, low_energy_states(&m, n)?)?;
        let r = spectral_bound(&m, &ConnectivityScheme::SingleBitFlip, &data)?;
        gaps.push(r.worst_gap);
        lam.push(r.lambda2_bound - r.lambda2);
        finite += r.entries.iter().filter(|e| e.bound.is_finite()).count();
        total += r.entries.len();
    }
    Ok(SuiteReport {
        metrics: vec![
            Metric::new("max (bound - log p∞)", max_of(gaps), Bound::AtMost(1e-10)),
            Metric::new("max (λ2 estimate - λ2)", max_of(lam), Bound::AtMost(1e-10)),
            Metric::new("finite bounds", finite as f64, Bound::AtLeast(1.0)),
        ],
        detail: format!("{INSTANCES} instances, d = {d}; {finite} of {total} bounds finite"),
    })
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

pub(crate) fn specialization() -> Result<SuiteReport> {
    let mut rng = seeded(0x0073_7065_636c);
    let mut ising = 0.0f64;
    let mut rbm = 0.0f64;
    let mut hop = 0.0f64;
    let opts = MpfOptions::default();
    for i in 0..INSTANCES {
        let d = rng.random_range(2..=8);
        let data = random_rows(d, rng.random_range(1..=12), &mut rng)?;

        let jp = normal_vec(d * d, 0.7, &mut rng);
        let model = IsingModel::from_asymmetric(d, &jp)?;
        let allflip = i % 2 == 1;
        let scheme = if allflip {
            ConnectivityScheme::SingleFlipPlusComplement
        } else {
            ConnectivityScheme::SingleBitFlip
        };
        let special = ising_mpf(&jp, d, &data, allflip)?;
        let generic = mpf_objective(&model, &data, &scheme, &opts)?;
        ising = ising
            .max(rel_diff(special.value, generic.value))
            .max(rel_error(
                &pack_asymmetric_grad(&special.grad, &model),
                &generic.grad,
            ));

        let nh = rng.random_range(1..=4);
        let r = RbmModel::new(nh, d, normal_vec(nh * d, 0.7, &mut rng))?;
        let special = rbm_mpf(&r, &data)?;
        let generic = mpf_objective(&r, &data, &ConnectivityScheme::SingleBitFlip, &opts)?;
        rbm = rbm
            .max(rel_diff(special.value, generic.value))
            .max(rel_error(&special.grad, &generic.grad));

        let net =
            HopfieldNet::from_params(d, &normal_vec(HopfieldNet::n_params_for(d), 0.7, &mut rng))?;
        let mut mapped = IsingModel::zeros(d);
        for a in 0..d {
            mapped.set(a, a, net.thresholds()[a]);
            for b in a + 1..d {
                mapped.set(a, b, -0.5 * net.weight(a, b));
            }
        }
        let special = hopfield_mpf_objective(&net, &data)?;
        let generic = mpf_objective(&mapped, &data, &ConnectivityScheme::SingleBitFlip, &opts)?;
        let count = data.len() as f64;
        let mut g = Vec::with_capacity(HopfieldNet::n_params_for(d));
        for a in 0..d {
            for b in a + 1..d {
                g.push(-0.5 * count * generic.grad[mapped.idx(a, b)]);
            }
        }
        for a in 0..d {
            g.push(count * generic.grad[mapped.idx(a, a)]);
        }
        hop = hop
            .max(rel_diff(special.value, count * generic.value))
            .max(rel_error(&special.flat_grad(), &g));
    }
    Ok(SuiteReport {
        metrics: vec![
            Metric::new(
                "max rel. difference, ising_mpf",
                ising,
                Bound::AtMost(1e-12),
            ),
            Metric::new("max rel. difference, rbm_mpf", rbm, Bound::AtMost(1e-12)),
            Metric::new(
                "max rel. difference, hopfield_mpf_objective",
                hop,
                Bound::AtMost(1e-12),
            ),
        ],
        detail: format!("{INSTANCES} random instances per family, values and gradients"),
    })
}
