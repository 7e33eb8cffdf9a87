use crate::error::{check_dim, Result};
use crate::models::{sigmoid, softplus, IsingModel};
use crate::optimize::{lbfgs_minimize, LbfgsResult, OptimizerConfig};
use crate::statespace::Dataset;

/// `p(x_n = 1 | x_rest) = σ(-(J_nn + 2 Σ_{i≠n} J_in x_i))`.
pub fn pl_conditional(model: &IsingModel, x: &[u8], n: usize) -> f64 {
    sigmoid(-model.on_field(x, n))
}

/// Mean log-pseudolikelihood `Σ_n log p(x_n | x_rest)` and its gradient over
/// the packed Ising parameters. This is to be maximised.
pub fn pl_objective(model: &IsingModel, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    let d = model.packed().len();
    let dim = crate::models::EnergyModel::dim(model);
    check_dim(dim, data.dim())?;
    let mut value = 0.0;
    let mut grad = vec![0.0; d];
    for (x, w) in data.weighted_binary_rows()? {
        for n in 0..dim {
            let s = 2.0 * x[n] as f64 - 1.0;
            let h = model.on_field(x, n);
            value -= w * softplus(s * h);
            // d/dh of -softplus(s h)
            let dh = -w * s * sigmoid(s * h);
            grad[model.idx(n, n)] += dh;
            for i in (0..dim).filter(|&i| i != n && x[i] == 1) {
                grad[model.idx(i, n)] += 2.0 * dh;
            }
        }
    }
    Ok((value, grad))
}

/// Maximises the pseudolikelihood with L-BFGS on its negation.
pub fn pl_fit(
    init: IsingModel,
    data: &Dataset,
    cfg: &OptimizerConfig,
) -> Result<(IsingModel, LbfgsResult)> {
    let dim = crate::models::EnergyModel::dim(&init);
    pl_objective(&init, data)?;
    let res = lbfgs_minimize(
        |th, g| match IsingModel::from_packed(dim, th.to_vec()).and_then(|m| pl_objective(&m, data))
        {
            Ok((v, grad)) => {
                for (gi, v) in g.iter_mut().zip(grad) {
                    *gi = -v;
                }
                -v
            }
            Err(_) => f64::NAN,
        },
        init.packed(),
        cfg,
    )?;
    Ok((IsingModel::from_packed(dim, res.x.clone())?, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_conditional, fd_gradient, model_distribution, rel_error};
    use crate::rng::seeded;
    use crate::samplers::exact_sample;
    use crate::statespace::BinaryState;
    use rand::Rng;

    fn random(d: usize, rng: &mut impl Rng) -> IsingModel {
        IsingModel::from_packed(
            d,
            (0..IsingModel::n_params_for(d))
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        )
        .unwrap()
    }

    fn rows(d: usize, n: usize, rng: &mut impl Rng) -> Dataset {
        Dataset::binary(
            d,
            (0..n)
                .map(|_| {
                    BinaryState::new((0..d).map(|_| rng.random_range(0..2)).collect()).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_couplings() {
        let mut rng = seeded(0);
        let (v, _) = pl_objective(&IsingModel::zeros(4), &rows(4, 10, &mut rng)).unwrap();
        assert!((v - 4.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn conditionals_match_enumeration() {
        let mut rng = seeded(1);
        for _ in 0..10 {
            let m = random(6, &mut rng);
            let x: Vec<u8> = (0..6).map(|_| rng.random_range(0..2)).collect();
            for n in 0..6 {
                let a = pl_conditional(&m, &x, n);
                let b = exact_conditional(&m, &x, n).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_fd() {
        let mut rng = seeded(2);
        for _ in 0..20 {
            let m = random(5, &mut rng);
            let data = rows(5, 15, &mut rng);
            let (_, g) = pl_objective(&m, &data).unwrap();
            let fd = fd_gradient(
                |th| {
                    pl_objective(&IsingModel::from_packed(5, th.to_vec()).unwrap(), &data)
                        .unwrap()
                        .0
                },
                m.packed(),
                None,
            );
            assert!(rel_error(&g, &fd) < 1e-6);
        }
    }

    #[test]
    fn fit_approaches_truth() {
        let mut rng = seeded(3);
        let truth = random(5, &mut rng);
        let s = exact_sample(&model_distribution(&truth).unwrap(), 20_000, &mut rng).unwrap();
        let data = Dataset::binary(5, s).unwrap();
        let (fit, res) = pl_fit(IsingModel::zeros(5), &data, &OptimizerConfig::default()).unwrap();
        assert!(res.grad_inf < 1e-5);
        let mse: f64 = fit
            .packed()
            .iter()
            .zip(truth.packed())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 15.0;
        assert!(mse < 0.01, "{mse}");
    }
}
