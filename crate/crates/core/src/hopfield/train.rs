use serde::Serialize;

use crate::error::{check_dim, MpfError, Result};
use crate::hopfield::{hopfield_mpf_objective, HopfieldNet};
use crate::optimize::{lbfgs_minimize, LbfgsResult, OptimizerConfig};
use crate::statespace::Dataset;

/// L-BFGS settings used for Hopfield storage: `‖∇K‖∞ < 1e-6` or 500 iterations.
pub fn mpf_train_config() -> OptimizerConfig {
    OptimizerConfig::default()
        .with_max_iters(500)
        .with_grad_tol(1e-6)
}

/// Minimizes the flow objective over `(J, θ)` starting from the zero network.
pub fn mpf_train(patterns: &Dataset, cfg: &OptimizerConfig) -> Result<(HopfieldNet, LbfgsResult)> {
    let n = patterns.dim();
    patterns.binary_rows()?;
    if patterns.is_empty() {
        return Err(MpfError::InvalidArgument("no patterns to store".into()));
    }
    let mut failure = None;
    let result = lbfgs_minimize(
        |p, g| {
            let net = match HopfieldNet::from_params(n, p) {
                Ok(net) => net,
                Err(e) => {
                    failure.get_or_insert(e);
                    g.iter_mut().for_each(|v| *v = 0.0);
                    return f64::NAN;
                }
            };
            match hopfield_mpf_objective(&net, patterns) {
                Ok(obj) => {
                    g.copy_from_slice(&obj.flat_grad());
                    obj.value
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &vec![0.0; HopfieldNet::n_params_for(n)],
        cfg,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((HopfieldNet::from_params(n, &result.x)?, result))
}

/// Outer-product rule: `J_ij = Σ_μ ξ_i ξ_j` off the diagonal, `θ = 0`.
pub fn opr_train(patterns: &Dataset) -> Result<HopfieldNet> {
    let n = patterns.dim();
    let rows = patterns.binary_rows()?;
    if rows.is_empty() {
        return Err(MpfError::InvalidArgument("no patterns to store".into()));
    }
    let mut j = vec![0.0; n * n];
    for x in rows {
        let xi: Vec<f64> = x.iter().map(|&b| 2.0 * b as f64 - 1.0).collect();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    j[a * n + b] += xi[a] * xi[b];
                }
            }
        }
    }
    HopfieldNet::new(n, j, vec![0.0; n])
}

#[derive(Debug, Clone, Serialize)]
pub struct PerResult {
    #[serde(skip)]
    pub net: HopfieldNet,
    pub converged: bool,
    pub epochs: usize,
}

/// Symmetrized perceptron rule. For each pattern the violated units `V` are
/// found on the current net, then `ΔJ_ij = ½(R_ij + R_ji)` with
/// `R_ij = η ξ_i x_j` for `i ∈ V`, and `Δθ_i = -η ξ_i` for `i ∈ V`.
pub fn per_train(
    net0: &HopfieldNet,
    patterns: &Dataset,
    eta: f64,
    max_epochs: usize,
) -> Result<PerResult> {
    let n = net0.n();
    check_dim(n, patterns.dim())?;
    let rows = patterns.binary_rows()?;
    if !(eta > 0.0) {
        return Err(MpfError::InvalidArgument(format!(
            "learning rate must be positive, got {eta}"
        )));
    }
    let mut j = net0.weights().to_vec();
    let mut theta = net0.thresholds().to_vec();
    let mut net = net0.clone();
    for epoch in 1..=max_epochs {
        let mut clean = true;
        for x in rows {
            let r: Vec<f64> = (0..n)
                .map(|i| {
                    if u8::from(net.local_field(x, i) > 0.0) == x[i] {
                        0.0
                    } else {
                        eta * (2.0 * x[i] as f64 - 1.0)
                    }
                })
                .collect();
            if r.iter().all(|&v| v == 0.0) {
                continue;
            }
            clean = false;
            for a in 0..n {
                theta[a] -= r[a];
                for b in a + 1..n {
                    let dj = 0.5 * (r[a] * x[b] as f64 + r[b] * x[a] as f64);
                    j[a * n + b] += dj;
                    j[b * n + a] += dj;
                }
            }
            net = HopfieldNet::new(n, j.clone(), theta.clone())?;
        }
        if clean {
            return Ok(PerResult {
                net,
                converged: true,
                epochs: epoch,
            });
        }
    }
    Ok(PerResult {
        net,
        converged: false,
        epochs: max_epochs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::statespace::BinaryState;
    use rand::Rng;

    fn patterns(n: usize, m: usize, rng: &mut impl Rng) -> Dataset {
        Dataset::binary(
            n,
            (0..m)
                .map(|_| {
                    BinaryState::new((0..n).map(|_| rng.random_range(0..2)).collect()).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    fn stored_fraction(net: &HopfieldNet, data: &Dataset) -> f64 {
        let rows = data.binary_rows().unwrap();
        rows.iter()
            .filter(|x| net.is_fixed_point(x).unwrap())
            .count() as f64
            / rows.len() as f64
    }

    #[test]
    fn opr_single_pattern() {
        let data = Dataset::binary(3, vec![BinaryState::new(vec![1, 0, 1]).unwrap()]).unwrap();
        let net = opr_train(&data).unwrap();
        assert_eq!(net.weight(0, 1), -1.0);
        assert_eq!(net.weight(0, 2), 1.0);
        assert_eq!(net.weight(1, 2), -1.0);
        assert!(net.is_fixed_point(&[1, 0, 1]).unwrap());
    }

    #[test]
    fn opr_ignores_complement_sign() {
        let x = BinaryState::new(vec![1, 0, 0, 1, 1]).unwrap();
        let a = opr_train(&Dataset::binary(5, vec![x.clone()]).unwrap()).unwrap();
        let b = opr_train(&Dataset::binary(5, vec![x.complement()]).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn opr_fails_at_one_pattern_per_unit() {
        let mut rng = seeded(10);
        let mut total = 0.0;
        for _ in 0..5 {
            let data = patterns(32, 32, &mut rng);
            total += stored_fraction(&opr_train(&data).unwrap(), &data);
        }
        assert!(total / 5.0 < 0.5);
    }

    #[test]
    fn per_leaves_fixed_points_alone() {
        let data = Dataset::binary(3, vec![BinaryState::new(vec![1, 0, 1]).unwrap()]).unwrap();
        let net = opr_train(&data).unwrap();
        let res = per_train(&net, &data, 0.1, 10).unwrap();
        assert!(res.converged);
        assert_eq!(res.epochs, 1);
        assert_eq!(res.net, net);
    }

    #[test]
    fn per_stores_single_pattern() {
        let x = BinaryState::new(vec![1, 1, 0, 1, 0, 0, 1, 0]).unwrap();
        let data = Dataset::binary(8, vec![x.clone()]).unwrap();
        let res = per_train(&HopfieldNet::zeros(8), &data, 0.1, 100).unwrap();
        assert!(res.converged);
        assert!(res.net.is_fixed_point(&x).unwrap());
    }

    #[test]
    fn per_reports_non_convergence() {
        let mut rng = seeded(11);
        let data = patterns(16, 64, &mut rng);
        let res = per_train(&HopfieldNet::zeros(16), &data, 0.1, 2).unwrap();
        assert!(!res.converged);
        assert_eq!(res.epochs, 2);
        assert!(per_train(&HopfieldNet::zeros(16), &data, 0.0, 2).is_err());
    }

    #[test]
    fn per_stores_one_pattern_per_unit() {
        let mut rng = seeded(12);
        let data = patterns(32, 32, &mut rng);
        let res = per_train(&HopfieldNet::zeros(32), &data, 0.1, 2000).unwrap();
        assert!(res.converged);
        assert_eq!(stored_fraction(&res.net, &data), 1.0);
    }

    #[test]
    fn mpf_stores_one_pattern_per_unit() {
        let mut rng = seeded(13);
        let data = patterns(32, 32, &mut rng);
        let (net, _) = mpf_train(&data, &mpf_train_config()).unwrap();
        assert_eq!(stored_fraction(&net, &data), 1.0);
    }

    #[test]
    fn small_objective_means_strict_minima() {
        let mut rng = seeded(14);
        let data = patterns(20, 6, &mut rng);
        let (net, _) = mpf_train(&data, &mpf_train_config()).unwrap();
        // scale up until K < 1
        let mut p = net.to_params();
        let mut k = hopfield_mpf_objective(&net, &data).unwrap().value;
        while k >= 1.0 {
            p.iter_mut().for_each(|v| *v *= 2.0);
            k = hopfield_mpf_objective(&HopfieldNet::from_params(20, &p).unwrap(), &data)
                .unwrap()
                .value;
        }
        let scaled = HopfieldNet::from_params(20, &p).unwrap();
        for x in data.binary_rows().unwrap() {
            let e = scaled.energy(x).unwrap();
            for i in 0..20 {
                assert!(scaled.energy(&x.bit_flip(i).unwrap()).unwrap() > e);
            }
            assert!(scaled.is_fixed_point(x).unwrap());
        }
    }
}
