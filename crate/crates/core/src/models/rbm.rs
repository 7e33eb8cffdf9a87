use crate::error::{check_dim, Result};
use crate::models::{sigmoid, softplus, EnergyModel};

/// Restricted Boltzmann machine with the hidden layer summed out:
/// `E(v) = -Σ_i log(1 + exp(-W_i v))`.
///
/// The matching joint energy is `E(v, h) = hᵀWv`, so that
/// `exp(-E(v)) = Σ_h exp(-hᵀWv)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmModel {
    n_hidden: usize,
    d: usize,
    w: Vec<f64>,
}

impl RbmModel {
    pub fn new(n_hidden: usize, d: usize, w: Vec<f64>) -> Result<Self> {
        check_dim(n_hidden * d, w.len())?;
        Ok(Self { n_hidden, d, w })
    }

    pub fn zeros(n_hidden: usize, d: usize) -> Self {
        Self {
            n_hidden,
            d,
            w: vec![0.0; n_hidden * d],
        }
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Hidden pre-activations `W v`.
    pub fn activations(&self, v: &[u8]) -> Vec<f64> {
        self.w
            .chunks_exact(self.d)
            .map(|row| {
                row.iter()
                    .zip(v)
                    .filter(|(_, &b)| b == 1)
                    .map(|(w, _)| *w)
                    .sum()
            })
            .collect()
    }

    /// Joint energy `hᵀWv`.
    pub fn joint_energy(&self, v: &[u8], h: &[u8]) -> f64 {
        self.activations(v)
            .iter()
            .zip(h)
            .filter(|(_, &b)| b == 1)
            .map(|(a, _)| *a)
            .sum()
    }

    /// `p(h_i = 1 | v) = σ(-W_i v)`.
    pub fn hidden_probs(&self, v: &[u8]) -> Vec<f64> {
        self.activations(v)
            .into_iter()
            .map(|a| sigmoid(-a))
            .collect()
    }

    /// `p(v_k = 1 | h) = σ(-Σ_i h_i W_ik)`.
    pub fn visible_probs(&self, h: &[u8]) -> Vec<f64> {
        (0..self.d)
            .map(|k| {
                let s: f64 = (0..self.n_hidden)
                    .filter(|&i| h[i] == 1)
                    .map(|i| self.w[i * self.d + k])
                    .sum();
                sigmoid(-s)
            })
            .collect()
    }

    pub(crate) fn energy_from_activations(a: &[f64]) -> f64 {
        -a.iter().map(|&ai| softplus(-ai)).sum::<f64>()
    }
}

impl EnergyModel for RbmModel {
    fn dim(&self) -> usize {
        self.d
    }

    fn params(&self) -> &[f64] {
        &self.w
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        check_dim(self.w.len(), theta.len())?;
        self.w.copy_from_slice(theta);
        Ok(())
    }

    fn energy(&self, x: &[u8]) -> f64 {
        Self::energy_from_activations(&self.activations(x))
    }

    fn add_param_grad(&self, x: &[u8], scale: f64, grad: &mut [f64]) {
        // dE/dW_ik = σ(-a_i) x_k
        for (i, a) in self.activations(x).into_iter().enumerate() {
            let s = scale * sigmoid(-a);
            let row = &mut grad[i * self.d..(i + 1) * self.d];
            for (g, &xk) in row.iter_mut().zip(x) {
                if xk == 1 {
                    *g += s;
                }
            }
        }
    }
}

/// Energy and row-major `dE/dW` of the marginalised RBM at `v`.
pub fn rbm_energy(model: &RbmModel, v: &[u8]) -> Result<(f64, Vec<f64>)> {
    check_dim(model.d, v.len())?;
    Ok(model.energy_and_grad(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{fd_gradient, rel_error};
    use crate::rng::seeded;
    use crate::statespace::BinaryState;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random(nh: usize, d: usize, rng: &mut impl Rng) -> RbmModel {
        RbmModel::new(
            nh,
            d,
            (0..nh * d).map(|_| rng.sample(StandardNormal)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_weights() {
        let m = RbmModel::zeros(3, 5);
        let (e, _) = rbm_energy(&m, &[1, 0, 1, 1, 0]).unwrap();
        assert!((e + 3.0 * 2f64.ln()).abs() < 1e-15);
        assert!((e + 2.0794415416798357).abs() < 1e-12);
        assert!(rbm_energy(&m, &[1, 0]).is_err());
    }

    #[test]
    fn marginalization_identity() {
        let mut rng = seeded(5);
        for nh in [3usize, 6, 10] {
            let m = random(nh, 4, &mut rng);
            for vi in 0..16 {
                let v = BinaryState::decode(vi, 4).unwrap();
                let mut z = 0.0;
                for hi in 0..(1usize << nh) {
                    let h = BinaryState::decode(hi, nh).unwrap();
                    z += (-m.joint_energy(&v, &h)).exp();
                }
                let lhs = (-m.energy(&v)).exp();
                assert!((lhs - z).abs() <= 1e-12 * z.max(1.0), "{lhs} vs {z}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded(6);
        for _ in 0..20 {
            let m = random(3, 4, &mut rng);
            let v: Vec<u8> = (0..4).map(|_| rng.random_range(0..2)).collect();
            let (_, g) = rbm_energy(&m, &v).unwrap();
            let fd = fd_gradient(
                |th| {
                    let mut mm = m.clone();
                    mm.set_params(th).unwrap();
                    mm.energy(&v)
                },
                m.params(),
                None,
            );
            assert!(rel_error(&g, &fd) < 1e-7);
        }
    }

    #[test]
    fn conditionals_match_joint() {
        let mut rng = seeded(7);
        let m = random(2, 3, &mut rng);
        let v = [1u8, 0, 1];
        let ph = m.hidden_probs(&v);
        // p(h_0 = 1 | v) from the joint with h_1 summed out.
        let w = |h: [u8; 2]| (-m.joint_energy(&v, &h)).exp();
        let num = w([1, 0]) + w([1, 1]);
        let den = num + w([0, 0]) + w([0, 1]);
        assert!((ph[0] - num / den).abs() < 1e-14);
    }
}
