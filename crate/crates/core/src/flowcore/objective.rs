use std::collections::HashSet;

use crate::error::{check_dim, MpfError, Result};
use crate::flowcore::{clamped_exp, neighbor_bits, ConnectivityScheme, FlowObjective, MpfOptions};
use crate::models::EnergyModel;
use crate::optimize::{lbfgs_minimize, LbfgsResult, OptimizerConfig};
use crate::par::{map_chunks, GradAcc, CHUNK};
use crate::statespace::Dataset;

/// `K(θ) = ε Σ_j w_j Σ_i g_ij exp(½(E_j - E_i))` over data rows `j` and their
/// neighbours `i`, with gradient `ε Σ_j w_j Σ_i ½ (∂E_j - ∂E_i) exp(½(E_j - E_i))`.
///
/// Row weights default to `1/|D|`.
pub fn mpf_objective<M: EnergyModel + ?Sized>(
    model: &M,
    data: &Dataset,
    scheme: &ConnectivityScheme,
    opts: &MpfOptions,
) -> Result<FlowObjective> {
    check_dim(model.dim(), data.dim())?;
    if !(opts.epsilon_scale > 0.0) {
        return Err(MpfError::InvalidArgument(format!(
            "epsilon_scale must be positive, got {}",
            opts.epsilon_scale
        )));
    }
    if !scheme.is_discrete_deterministic() {
        return Err(MpfError::InvalidArgument(format!(
            "{} connectivity is not supported by the deterministic objective",
            scheme.name()
        )));
    }
    let rows = data.weighted_binary_rows()?;
    let support: HashSet<&[u8]> = if opts.exclude_data_neighbors {
        rows.iter().map(|(x, _)| x.bits()).collect()
    } else {
        HashSet::new()
    };
    let np = model.n_params();
    let parts = map_chunks(rows.len(), CHUNK, |range| {
        let mut acc = GradAcc::new(np);
        for &(x, w) in &rows[range] {
            let e_j = model.energy(x);
            let mut row_total = 0.0;
            for y in neighbor_bits(x, scheme) {
                if opts.exclude_data_neighbors && support.contains(y.as_slice()) {
                    continue;
                }
                let t = clamped_exp(0.5 * (e_j - model.energy(&y)), &mut acc.clamped);
                acc.value += w * t;
                row_total += w * t;
                model.add_param_grad(&y, -0.5 * w * t, &mut acc.grad);
            }
            model.add_param_grad(x, 0.5 * row_total, &mut acc.grad);
        }
        acc
    });
    let mut acc = GradAcc::sum(np, parts);
    let eps = opts.epsilon_scale;
    acc.value *= eps;
    acc.grad.iter_mut().for_each(|g| *g *= eps);
    Ok(FlowObjective {
        value: acc.value,
        grad: acc.grad,
        clamped: acc.clamped,
    })
}

/// Minimises [`mpf_objective`] over the model parameters with L-BFGS.
pub fn mpf_fit<M: EnergyModel + Clone>(
    init: M,
    data: &Dataset,
    scheme: &ConnectivityScheme,
    opts: &MpfOptions,
    cfg: &OptimizerConfig,
) -> Result<(M, LbfgsResult)> {
    mpf_objective(&init, data, scheme, opts)?;
    let mut work = init.clone();
    let res = lbfgs_minimize(
        |p, g| {
            if work.set_params(p).is_err() {
                return f64::NAN;
            }
            match mpf_objective(&work, data, scheme, opts) {
                Ok(obj) => {
                    g.copy_from_slice(&obj.grad);
                    obj.value
                }
                Err(_) => f64::NAN,
            }
        },
        init.params(),
        cfg,
    )?;
    let mut model = init;
    model.set_params(&res.x)?;
    Ok((model, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{IsingModel, TabularModel};
    use crate::oracle::{build_flow_matrix, fd_gradient, model_distribution, rel_error};
    use crate::rng::seeded;
    use crate::statespace::{empirical_distribution, BinaryState};
    use rand::Rng;

    fn random_rows(d: usize, n: usize, rng: &mut impl Rng) -> Vec<BinaryState> {
        (0..n)
            .map(|_| BinaryState::new((0..d).map(|_| rng.random_range(0..2)).collect()).unwrap())
            .collect()
    }

    fn random_ising(d: usize, rng: &mut impl Rng) -> IsingModel {
        let p = (0..IsingModel::n_params_for(d))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        IsingModel::from_packed(d, p).unwrap()
    }

    #[test]
    fn flat_energy_gives_eps_times_d() {
        let mut rng = seeded(1);
        let data = Dataset::binary(4, random_rows(4, 9, &mut rng)).unwrap();
        let opts = MpfOptions {
            epsilon_scale: 2.5,
            ..Default::default()
        };
        let k = mpf_objective(
            &IsingModel::zeros(4),
            &data,
            &ConnectivityScheme::SingleBitFlip,
            &opts,
        )
        .unwrap();
        assert!((k.value - 2.5 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn one_unit_closed_form() {
        let m = IsingModel::from_packed(1, vec![2.0]).unwrap();
        let data = Dataset::binary(1, vec![BinaryState::zeros(1)]).unwrap();
        let k = mpf_objective(
            &m,
            &data,
            &ConnectivityScheme::SingleBitFlip,
            &MpfOptions::default(),
        )
        .unwrap();
        assert!((k.value - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn matches_flow_matrix_and_fd() {
        let mut rng = seeded(2);
        for _ in 0..5 {
            let d = 6;
            let m = random_ising(d, &mut rng);
            let data = Dataset::binary(d, random_rows(d, 15, &mut rng)).unwrap();
            for exclude in [false, true] {
                let opts = MpfOptions {
                    epsilon_scale: 1.0,
                    exclude_data_neighbors: exclude,
                };
                let k =
                    mpf_objective(&m, &data, &ConnectivityScheme::SingleBitFlip, &opts).unwrap();
                let flow = build_flow_matrix(&m, &ConnectivityScheme::SingleBitFlip).unwrap();
                let p0 = empirical_distribution(&data).unwrap();
                let mut direct = 0.0;
                for j in 0..64 {
                    for i in 0..64 {
                        if i != j && (!exclude || p0.probs()[i] == 0.0) {
                            direct += flow.gamma()[(i, j)] * p0.probs()[j];
                        }
                    }
                }
                assert!((k.value - direct).abs() < 1e-12);
                let fd = fd_gradient(
                    |th| {
                        let mm = IsingModel::from_packed(d, th.to_vec()).unwrap();
                        mpf_objective(&mm, &data, &ConnectivityScheme::SingleBitFlip, &opts)
                            .unwrap()
                            .value
                    },
                    m.packed(),
                    None,
                );
                assert!(rel_error(&k.grad, &fd) < 1e-6);
            }
        }
    }

    #[test]
    fn constant_shift_invariance() {
        let mut rng = seeded(3);
        let table: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0)).collect();
        let shifted: Vec<f64> = table.iter().map(|e| e + 4.2).collect();
        let data = Dataset::binary(4, random_rows(4, 10, &mut rng)).unwrap();
        let opts = MpfOptions::default();
        let a = mpf_objective(
            &TabularModel::new(table).unwrap(),
            &data,
            &ConnectivityScheme::SingleBitFlip,
            &opts,
        )
        .unwrap();
        let b = mpf_objective(
            &TabularModel::new(shifted).unwrap(),
            &data,
            &ConnectivityScheme::SingleBitFlip,
            &opts,
        )
        .unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        // the gradient sums to zero along the constant direction
        assert!(a.grad.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn stationary_at_model_distribution() {
        let mut rng = seeded(4);
        let m = random_ising(5, &mut rng);
        let data = Dataset::from_distribution(&model_distribution(&m).unwrap()).unwrap();
        for scheme in [
            ConnectivityScheme::SingleBitFlip,
            ConnectivityScheme::SingleFlipPlusComplement,
        ] {
            let k = mpf_objective(&m, &data, &scheme, &MpfOptions::default()).unwrap();
            assert!(k.grad.iter().all(|g| g.abs() < 1e-12), "{:?}", k.grad);
        }
    }

    #[test]
    fn clamp_flag_set_on_huge_energies() {
        let m = IsingModel::from_packed(1, vec![-2000.0]).unwrap();
        let data = Dataset::binary(1, vec![BinaryState::zeros(1)]).unwrap();
        let k = mpf_objective(
            &m,
            &data,
            &ConnectivityScheme::SingleBitFlip,
            &MpfOptions::default(),
        )
        .unwrap();
        assert!(k.clamped);
        assert!(k.value.is_finite());
    }

    #[test]
    fn sampled_scheme_rejected() {
        let data = Dataset::binary(1, vec![BinaryState::zeros(1)]).unwrap();
        let r = mpf_objective(
            &IsingModel::zeros(1),
            &data,
            &ConnectivityScheme::EpsilonHypercube(0.1),
            &MpfOptions::default(),
        );
        assert!(r.is_err());
    }
}
