use serde::Serialize;

use crate::error::{check_dim, MpfError, Result};
use crate::flowcore::clamped_exp;
use crate::hopfield::HopfieldNet;
use crate::statespace::Dataset;

#[derive(Debug, Clone, Serialize)]
pub struct HopfieldObjective {
    pub value: f64,
    /// Row-major `n x n`, symmetric, zero diagonal: `∂K/∂J_ab` for the shared
    /// parameter `J_ab = J_ba`.
    pub grad_j: Vec<f64>,
    pub grad_theta: Vec<f64>,
    pub clamped: bool,
}

impl HopfieldObjective {
    /// Gradient in the [`HopfieldNet::to_params`] layout.
    pub fn flat_grad(&self) -> Vec<f64> {
        let n = self.grad_theta.len();
        let mut g = Vec::with_capacity(HopfieldNet::n_params_for(n));
        for a in 0..n {
            for b in a + 1..n {
                g.push(self.grad_j[a * n + b]);
            }
        }
        g.extend_from_slice(&self.grad_theta);
        g
    }
}

/// `K = Σ_{x∈D} Σ_i exp(½ (J_i x - θ_i) δ_i)`, `δ_i = 1 - 2x_i`, summed (not
/// averaged) over patterns. Weighted datasets count each row `w·|D|` times.
pub fn hopfield_mpf_objective(net: &HopfieldNet, patterns: &Dataset) -> Result<HopfieldObjective> {
    let n = net.n();
    check_dim(n, patterns.dim())?;
    let count = patterns.len() as f64;
    let mut value = 0.0;
    let mut grad_j = vec![0.0; n * n];
    let mut grad_theta = vec![0.0; n];
    let mut clamped = false;
    for (x, w) in patterns.weighted_binary_rows()? {
        let c = w * count;
        for i in 0..n {
            let delta = 1.0 - 2.0 * x[i] as f64;
            let t = c * clamped_exp(0.5 * net.local_field(x, i) * delta, &mut clamped);
            value += t;
            let s = 0.5 * t * delta;
            grad_theta[i] -= s;
            for k in (0..n).filter(|&k| k != i && x[k] == 1) {
                grad_j[i * n + k] += s;
                grad_j[k * n + i] += s;
            }
        }
    }
    Ok(HopfieldObjective {
        value,
        grad_j,
        grad_theta,
        clamped,
    })
}

/// One steepest-descent step on the single-pattern objective:
/// `ΔJ_ij = -η ½(δ_i x_j e_i + δ_j x_i e_j)`, `Δθ_i = η ½ δ_i e_i`,
/// with `e_i = exp(½ (J_i x - θ_i) δ_i)`.
pub fn online_mpf_update(net: &HopfieldNet, x: &[u8], eta: f64) -> Result<HopfieldNet> {
    let n = net.n();
    check_dim(n, x.len())?;
    if !(eta > 0.0) {
        return Err(MpfError::InvalidArgument(format!(
            "learning rate must be positive, got {eta}"
        )));
    }
    let mut clamped = false;
    let mut de = vec![0.0; n];
    for i in 0..n {
        let delta = 1.0 - 2.0 * x[i] as f64;
        de[i] = delta * clamped_exp(0.5 * net.local_field(x, i) * delta, &mut clamped);
    }
    let mut j = net.weights().to_vec();
    for a in 0..n {
        for b in a + 1..n {
            let g = 0.5 * (de[a] * x[b] as f64 + de[b] * x[a] as f64);
            j[a * n + b] -= eta * g;
            j[b * n + a] -= eta * g;
        }
    }
    let theta = net
        .thresholds()
        .iter()
        .zip(&de)
        .map(|(t, d)| t + eta * 0.5 * d)
        .collect();
    HopfieldNet::new(n, j, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowcore::{mpf_objective, ConnectivityScheme, MpfOptions};
    use crate::models::IsingModel;
    use crate::oracle::{fd_gradient, rel_error};
    use crate::rng::seeded;
    use crate::statespace::BinaryState;
    use rand::Rng;

    fn random_net(n: usize, rng: &mut impl Rng) -> HopfieldNet {
        let p: Vec<f64> = (0..HopfieldNet::n_params_for(n))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        HopfieldNet::from_params(n, &p).unwrap()
    }

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

    /// `J_ising = -½ J_hop` off the diagonal, `θ` on it.
    fn as_ising(net: &HopfieldNet) -> IsingModel {
        let n = net.n();
        let mut m = IsingModel::zeros(n);
        for a in 0..n {
            m.set(a, a, net.thresholds()[a]);
            for b in a + 1..n {
                m.set(a, b, -0.5 * net.weight(a, b));
            }
        }
        m
    }

    #[test]
    fn zero_net_gives_count_times_n() {
        let mut rng = seeded(0);
        let k = hopfield_mpf_objective(&HopfieldNet::zeros(6), &patterns(6, 7, &mut rng)).unwrap();
        assert_eq!(k.value, 42.0);
    }

    #[test]
    fn matches_generic_objective() {
        let mut rng = seeded(1);
        for _ in 0..30 {
            let n = rng.random_range(2..9);
            let net = random_net(n, &mut rng);
            let data = patterns(n, rng.random_range(1..10), &mut rng);
            let k = hopfield_mpf_objective(&net, &data).unwrap();
            let g = mpf_objective(
                &as_ising(&net),
                &data,
                &ConnectivityScheme::SingleBitFlip,
                &MpfOptions::default(),
            )
            .unwrap();
            let generic = g.value * data.len() as f64;
            assert!((k.value - generic).abs() <= 1e-12 * generic);
        }
    }

    #[test]
    fn gradient_matches_fd() {
        let mut rng = seeded(2);
        for _ in 0..20 {
            let n = 7;
            let net = random_net(n, &mut rng);
            let data = patterns(n, 5, &mut rng);
            let k = hopfield_mpf_objective(&net, &data).unwrap();
            let fd = fd_gradient(
                |p| {
                    hopfield_mpf_objective(&HopfieldNet::from_params(n, p).unwrap(), &data)
                        .unwrap()
                        .value
                },
                &net.to_params(),
                None,
            );
            assert!(rel_error(&k.flat_grad(), &fd) < 1e-7);
            assert!((0..n).all(|i| k.grad_j[i * n + i] == 0.0));
        }
    }

    #[test]
    fn online_rule_is_gradient_step() {
        let mut rng = seeded(3);
        let n = 6;
        let net = random_net(n, &mut rng);
        let x: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let data = Dataset::binary(n, vec![BinaryState::new(x.clone()).unwrap()]).unwrap();
        let g = hopfield_mpf_objective(&net, &data).unwrap().flat_grad();
        let eta = 0.05;
        let next = online_mpf_update(&net, &x, eta).unwrap();
        for ((a, b), gi) in next.to_params().iter().zip(net.to_params()).zip(&g) {
            assert!((a - (b - eta * gi)).abs() < 1e-14);
        }
    }

    #[test]
    fn deep_minimum_barely_moves() {
        // pattern 1010 held by strong weights: every exponent is very negative
        let n = 4;
        let x = [1u8, 0, 1, 0];
        let mut j = vec![0.0; 16];
        j[2] = 200.0;
        j[8] = 200.0;
        for (a, b) in [(0, 1), (0, 3), (1, 2), (2, 3), (1, 3)] {
            j[a * n + b] = -200.0;
            j[b * n + a] = -200.0;
        }
        let net = HopfieldNet::new(n, j, vec![100.0; 4]).unwrap();
        let next = online_mpf_update(&net, &x, 1.0).unwrap();
        let moved = next
            .to_params()
            .iter()
            .zip(net.to_params())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(moved < 1e-6);
    }

    #[test]
    fn online_updates_keep_structure() {
        let mut rng = seeded(4);
        let n = 8;
        let mut net = HopfieldNet::zeros(n);
        for _ in 0..1000 {
            let x: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            net = online_mpf_update(&net, &x, 0.01).unwrap();
        }
        for a in 0..n {
            assert_eq!(net.weight(a, a), 0.0);
            for b in 0..n {
                assert_eq!(net.weight(a, b), net.weight(b, a));
            }
        }
    }
}
