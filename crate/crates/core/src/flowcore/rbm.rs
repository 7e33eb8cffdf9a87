use crate::error::{check_dim, Result};
use crate::flowcore::{clamped_exp, FlowObjective};
use crate::models::{sigmoid, RbmModel};
use crate::par::{map_chunks, GradAcc, CHUNK};
use crate::statespace::Dataset;

/// Single-bit-flip flow objective of the hidden-marginalised RBM, normalised
/// by the data weights. Flipping visible unit `n` shifts every hidden
/// pre-activation by `±W_{·n}`, so no energies are recomputed from scratch.
pub fn rbm_mpf(model: &RbmModel, data: &Dataset) -> Result<FlowObjective> {
    let d = crate::models::EnergyModel::dim(model);
    check_dim(d, data.dim())?;
    let nh = model.n_hidden();
    let w = model.weights();
    let rows = data.weighted_binary_rows()?;
    let parts = map_chunks(rows.len(), CHUNK, |range| {
        let mut acc = GradAcc::new(nh * d);
        let mut a_flip = vec![0.0; nh];
        for &(x, wt) in &rows[range] {
            let a = model.activations(x);
            let e_x = RbmModel::energy_from_activations(&a);
            let s_x: Vec<f64> = a.iter().map(|&ai| sigmoid(-ai)).collect();
            let mut row_total = 0.0;
            for n in 0..d {
                let delta = 1.0 - 2.0 * x[n] as f64;
                for i in 0..nh {
                    a_flip[i] = a[i] + delta * w[i * d + n];
                }
                let e_y = RbmModel::energy_from_activations(&a_flip);
                let t = clamped_exp(0.5 * (e_x - e_y), &mut acc.clamped);
                acc.value += wt * t;
                row_total += wt * t;
                // -½ t ∂E(y)/∂W_ik = -½ t σ(-a'_i) y_k
                let c = -0.5 * wt * t;
                for i in 0..nh {
                    let s = c * sigmoid(-a_flip[i]);
                    for k in 0..d {
                        let yk = if k == n { 1 - x[k] } else { x[k] };
                        if yk == 1 {
                            acc.grad[i * d + k] += s;
                        }
                    }
                }
            }
            for i in 0..nh {
                let s = 0.5 * row_total * s_x[i];
                for k in (0..d).filter(|&k| x[k] == 1) {
                    acc.grad[i * d + k] += s;
                }
            }
        }
        acc
    });
    let acc = GradAcc::sum(nh * d, parts);
    Ok(FlowObjective {
        value: acc.value,
        grad: acc.grad,
        clamped: acc.clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowcore::{mpf_objective, ConnectivityScheme, MpfOptions};
    use crate::models::EnergyModel;
    use crate::oracle::{fd_gradient, rel_error};
    use crate::rng::seeded;
    use crate::statespace::BinaryState;
    use rand::Rng;

    fn rows(d: usize, n: usize, rng: &mut impl Rng) -> Dataset {
        let r = (0..n)
            .map(|_| BinaryState::new((0..d).map(|_| rng.random_range(0..2)).collect()).unwrap())
            .collect();
        Dataset::binary(d, r).unwrap()
    }

    #[test]
    fn zero_weights_give_d() {
        let mut rng = seeded(0);
        let data = rows(5, 7, &mut rng);
        let k = rbm_mpf(&RbmModel::zeros(3, 5), &data).unwrap();
        assert!((k.value * 7.0 - 35.0).abs() < 1e-12);
    }

    #[test]
    fn one_by_one_closed_form() {
        let w = 0.7f64;
        let m = RbmModel::new(1, 1, vec![w]).unwrap();
        let data = Dataset::binary(1, vec![BinaryState::zeros(1)]).unwrap();
        let e0 = -(2f64).ln();
        let e1 = -(1.0 + (-w).exp()).ln();
        let k = rbm_mpf(&m, &data).unwrap();
        assert!((k.value - (0.5 * (e0 - e1)).exp()).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_generic_and_fd() {
        let mut rng = seeded(5);
        for _ in 0..20 {
            let (nh, d) = (4, 6);
            let w: Vec<f64> = (0..nh * d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let m = RbmModel::new(nh, d, w.clone()).unwrap();
            let data = rows(d, 12, &mut rng);
            let fast = rbm_mpf(&m, &data).unwrap();
            let slow = mpf_objective(
                &m,
                &data,
                &ConnectivityScheme::SingleBitFlip,
                &MpfOptions::default(),
            )
            .unwrap();
            assert!((fast.value - slow.value).abs() < 1e-12);
            assert!(fast
                .grad
                .iter()
                .zip(&slow.grad)
                .all(|(a, b)| (a - b).abs() < 1e-12));
            let fd = fd_gradient(
                |th| {
                    rbm_mpf(&RbmModel::new(nh, d, th.to_vec()).unwrap(), &data)
                        .unwrap()
                        .value
                },
                m.params(),
                None,
            );
            assert!(rel_error(&fast.grad, &fd) < 1e-6);
        }
    }
}
