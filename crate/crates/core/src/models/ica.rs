use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{check_dim, MpfError, Result};
use crate::models::ContinuousEnergy;
use crate::rng::MpfRng;
use crate::statespace::Dataset;

/// ICA with a Laplace prior: `E(x) = Σ_k |J_k x|`, normalised by `2^K |det J^{-1}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcaModel {
    k: usize,
    j: Vec<f64>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl IcaModel {
    pub fn new(k: usize, j: Vec<f64>) -> Result<Self> {
        check_dim(k * k, j.len())?;
        Ok(Self { k, j })
    }

    pub fn identity(k: usize) -> Self {
        let mut j = vec![0.0; k * k];
        for i in 0..k {
            j[i * k + i] = 1.0;
        }
        Self { k, j }
    }

    /// `I + U` with `U` uniform on `[-0.5, 0.5]` entrywise, redrawn until
    /// `|det J| ≥ 0.1`.
    pub fn random(k: usize, rng: &mut MpfRng) -> Self {
        loop {
            let mut m = Self::identity(k);
            m.j.iter_mut()
                .for_each(|v| *v += rng.random_range(-0.5..0.5));
            if m.matrix().determinant().abs() >= 0.1 {
                return m;
            }
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.k, self.k, &self.j)
    }

    /// Source activations `J x`.
    pub fn sources(&self, x: &[f64]) -> Vec<f64> {
        self.j
            .chunks_exact(self.k)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl ContinuousEnergy for IcaModel {
    fn dim(&self) -> usize {
        self.k
    }

    fn params(&self) -> &[f64] {
        &self.j
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        check_dim(self.j.len(), theta.len())?;
        self.j.copy_from_slice(theta);
        Ok(())
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.sources(x).iter().map(|s| s.abs()).sum()
    }

    fn add_param_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) {
        for (r, s) in self.sources(x).into_iter().enumerate() {
            let c = scale * sign(s);
            if c != 0.0 {
                for (g, xv) in grad[r * self.k..(r + 1) * self.k].iter_mut().zip(x) {
                    *g += c * xv;
                }
            }
        }
    }

    fn state_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut e = 0.0;
        for (r, s) in self.sources(x).into_iter().enumerate() {
            e += s.abs();
            let c = sign(s);
            if c != 0.0 {
                for (g, jv) in grad.iter_mut().zip(&self.j[r * self.k..(r + 1) * self.k]) {
                    *g += c * jv;
                }
            }
        }
        e
    }
}

/// Energy, `dE/dJ` (row-major) and `∇ₓE` at `x`. `sign(0)` is taken as 0.
pub fn ica_energy(model: &IcaModel, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_dim(model.k, x.len())?;
    let mut gj = vec![0.0; model.k * model.k];
    model.add_param_grad(x, 1.0, &mut gj);
    let mut gx = vec![0.0; model.k];
    let e = model.state_grad(x, &mut gx);
    Ok((e, gj, gx))
}

/// Mean exact log-likelihood and its gradient in `J`:
/// `L = mean_x[-Σ_k |J_k x|] - K log 2 + log|det J|`.
pub fn ica_loglik(model: &IcaModel, data: &Dataset) -> Result<(f64, Vec<f64>)> {
    check_dim(model.k, data.dim())?;
    let rows = data.continuous_rows()?;
    let k = model.k;
    let lu = model.matrix().lu();
    let det = lu.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(MpfError::Singular);
    }
    let inv = lu.try_inverse().ok_or(MpfError::Singular)?;

    let mut grad = vec![0.0; k * k];
    let mut l = 0.0;
    for (i, x) in rows.iter().enumerate() {
        let w = data.weight(i);
        l -= w * model.energy(x);
        model.add_param_grad(x, -w, &mut grad);
    }
    l += -(k as f64) * 2f64.ln() + det.abs().ln();
    // d log|det J| / dJ = J^{-T}
    for r in 0..k {
        for c in 0..k {
            grad[r * k + c] += inv[(c, r)];
        }
    }
    Ok((l, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{fd_gradient, rel_error};
    use crate::rng::seeded;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn random_is_well_conditioned_and_seeded() {
        let a = IcaModel::random(3, &mut seeded(4));
        assert_eq!(a, IcaModel::random(3, &mut seeded(4)));
        assert!(a.matrix().determinant().abs() >= 0.1);
    }

    #[test]
    fn energy_examples() {
        let m = IcaModel::identity(2);
        assert_eq!(ica_energy(&m, &[3.0, -4.0]).unwrap().0, 7.0);
        let (e, gj, gx) = ica_energy(&m, &[0.0, 0.0]).unwrap();
        assert_eq!(e, 0.0);
        assert!(gj.iter().chain(&gx).all(|&g| g == 0.0));
        assert!(ica_energy(&m, &[1.0]).is_err());
    }

    #[test]
    fn one_dimensional_laplace() {
        let m = IcaModel::new(1, vec![2.0]).unwrap();
        let data = Dataset::continuous(1, vec![vec![0.5]]).unwrap();
        let (l, _) = ica_loglik(&m, &data).unwrap();
        assert!((l + 1.0).abs() < 1e-14);
    }

    #[test]
    fn determinant_scaling() {
        let data = Dataset::continuous(3, vec![vec![0.0; 3]]).unwrap();
        let mut rng = seeded(8);
        let j: Vec<f64> = (0..9).map(|_| rng.sample(StandardNormal)).collect();
        let c = 1.7f64;
        let (l1, _) = ica_loglik(&IcaModel::new(3, j.clone()).unwrap(), &data).unwrap();
        let (l2, _) = ica_loglik(
            &IcaModel::new(3, j.iter().map(|v| v * c).collect()).unwrap(),
            &data,
        )
        .unwrap();
        assert!((l2 - l1 - 3.0 * c.ln()).abs() < 1e-12);
    }

    #[test]
    fn singular_rejected() {
        let m = IcaModel::new(2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        let data = Dataset::continuous(2, vec![vec![1.0, 1.0]]).unwrap();
        assert!(matches!(ica_loglik(&m, &data), Err(MpfError::Singular)));
    }

    fn away_from_kinks(m: &IcaModel, x: &[f64]) -> bool {
        m.sources(x).iter().all(|s| s.abs() > 1e-3)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = seeded(9);
        let mut checked = 0;
        while checked < 20 {
            let j: Vec<f64> = (0..9).map(|_| rng.sample(StandardNormal)).collect();
            let m = IcaModel::new(3, j).unwrap();
            let x: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            if !away_from_kinks(&m, &x) {
                continue;
            }
            let (_, gj, gx) = ica_energy(&m, &x).unwrap();
            let fdj = fd_gradient(
                |th| {
                    let mut mm = m.clone();
                    mm.set_params(th).unwrap();
                    mm.energy(&x)
                },
                m.params(),
                None,
            );
            let fdx = fd_gradient(|xx| m.energy(xx), &x, None);
            assert!(rel_error(&gj, &fdj) < 1e-6);
            assert!(rel_error(&gx, &fdx) < 1e-6);
            checked += 1;
        }
    }

    #[test]
    fn loglik_gradient_matches_finite_differences() {
        let mut rng = seeded(10);
        for _ in 0..20 {
            let j: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            let m = IcaModel::new(2, j).unwrap();
            let rows: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..2).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            if rows.iter().any(|x| !away_from_kinks(&m, x)) {
                continue;
            }
            let data = Dataset::continuous(2, rows).unwrap();
            let (_, g) = ica_loglik(&m, &data).unwrap();
            let fd = fd_gradient(
                |th| {
                    ica_loglik(&IcaModel::new(2, th.to_vec()).unwrap(), &data)
                        .unwrap()
                        .0
                },
                m.params(),
                None,
            );
            assert!(rel_error(&g, &fd) < 1e-6);
        }
    }
}
