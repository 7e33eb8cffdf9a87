use crate::error::{check_dim, Result};
use crate::models::ContinuousEnergy;

/// Smooth quadratic energy `E(x) = ½ xᵀAx`, used by the score-matching checks.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticEnergy {
    d: usize,
    a: Vec<f64>,
}

impl QuadraticEnergy {
    pub fn new(d: usize, a: Vec<f64>) -> Result<Self> {
        check_dim(d * d, a.len())?;
        Ok(Self { d, a })
    }

    /// `E(x) = ½‖x‖²`.
    pub fn isotropic(d: usize) -> Self {
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            a[i * d + i] = 1.0;
        }
        Self { d, a }
    }

    /// Constant energy (`A = 0`).
    pub fn flat(d: usize) -> Self {
        Self {
            d,
            a: vec![0.0; d * d],
        }
    }
}

impl ContinuousEnergy for QuadraticEnergy {
    fn dim(&self) -> usize {
        self.d
    }

    fn params(&self) -> &[f64] {
        &self.a
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        check_dim(self.a.len(), theta.len())?;
        self.a.copy_from_slice(theta);
        Ok(())
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let mut e = 0.0;
        for i in 0..d {
            for j in 0..d {
                e += x[i] * self.a[i * d + j] * x[j];
            }
        }
        0.5 * e
    }

    fn add_param_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) {
        let d = self.d;
        for i in 0..d {
            for j in 0..d {
                grad[i * d + j] += scale * 0.5 * x[i] * x[j];
            }
        }
    }

    fn state_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.d;
        for i in 0..d {
            let mut g = 0.0;
            for j in 0..d {
                g += 0.5 * (self.a[i * d + j] + self.a[j * d + i]) * x[j];
            }
            grad[i] = g;
        }
        self.energy(x)
    }

    fn laplacian(&self, _x: &[f64]) -> Option<f64> {
        Some((0..self.d).map(|i| self.a[i * self.d + i]).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{fd_gradient, rel_error};

    #[test]
    fn isotropic_values() {
        let q = QuadraticEnergy::isotropic(2);
        let mut g = [0.0; 2];
        assert_eq!(q.state_grad(&[1.0, 1.0], &mut g), 1.0);
        assert_eq!(g, [1.0, 1.0]);
        assert_eq!(q.laplacian(&[1.0, 1.0]), Some(2.0));
    }

    #[test]
    fn gradients() {
        let q = QuadraticEnergy::new(2, vec![2.0, 0.3, -0.1, 1.5]).unwrap();
        let x = [0.7, -1.2];
        let mut g = [0.0; 2];
        q.state_grad(&x, &mut g);
        assert!(rel_error(&g, &fd_gradient(|y| q.energy(y), &x, None)) < 1e-8);
        let mut gp = vec![0.0; 4];
        q.add_param_grad(&x, 1.0, &mut gp);
        let fd = fd_gradient(
            |th| QuadraticEnergy::new(2, th.to_vec()).unwrap().energy(&x),
            q.params(),
            None,
        );
        assert!(rel_error(&gp, &fd) < 1e-8);
    }
}
