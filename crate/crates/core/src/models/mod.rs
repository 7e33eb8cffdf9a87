//! Energy functions and their parameter gradients.
//!
//! Every model exposes its parameters as one flat vector so the optimizers can
//! work on any of them. Packing orders:
//!
//! * Ising: upper triangle of the symmetric coupling matrix, row-major, diagonal included.
//! * RBM: `W` row-major (`n_hidden x d`).
//! * ICA: `J` row-major (`K x K`).
//! * Tabular: the energy table itself, indexed by state encoding.
//! * Quadratic: `A` row-major (`d x d`).

mod ica;
mod ising;
mod params;
mod quadratic;
mod rbm;
mod tabular;

pub use ica::{ica_energy, ica_loglik, IcaModel};
pub use ising::{ising_energy, lattice_ising, IsingModel};
pub use params::ModelParams;
pub use quadratic::QuadraticEnergy;
pub use rbm::{rbm_energy, RbmModel};
pub use tabular::{tabular_energy, TabularModel};

use crate::error::Result;

/// An energy over binary states `{0,1}^d`, `p(x) ∝ exp(-E(x; θ))`.
pub trait EnergyModel: Send + Sync {
    fn dim(&self) -> usize;

    fn params(&self) -> &[f64];

    fn set_params(&mut self, theta: &[f64]) -> Result<()>;

    fn energy(&self, x: &[u8]) -> f64;

    /// Adds `scale * dE/dθ` evaluated at `x` into `grad`.
    fn add_param_grad(&self, x: &[u8], scale: f64, grad: &mut [f64]);

    /// `E(x with bit n toggled) - E(x)`.
    fn flip_delta(&self, x: &[u8], n: usize) -> f64 {
        let mut y = x.to_vec();
        y[n] ^= 1;
        self.energy(&y) - self.energy(x)
    }

    fn n_params(&self) -> usize {
        self.params().len()
    }

    /// `(log Z, Σ_x p(x) dE/dθ)` over all `2^d` states, for models with a
    /// faster route than visiting each state. Callers check the enumeration cap.
    fn enumerated_expectation(&self) -> Option<(f64, Vec<f64>)> {
        None
    }

    fn energy_and_grad(&self, x: &[u8]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.n_params()];
        self.add_param_grad(x, 1.0, &mut g);
        (self.energy(x), g)
    }
}

/// An energy over `R^d` that can also be differentiated in the state.
pub trait ContinuousEnergy: Send + Sync {
    fn dim(&self) -> usize;

    fn params(&self) -> &[f64];

    fn set_params(&mut self, theta: &[f64]) -> Result<()>;

    fn energy(&self, x: &[f64]) -> f64;

    /// Adds `scale * dE/dθ` evaluated at `x` into `grad`.
    fn add_param_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]);

    /// Writes `∇ₓE` into `grad` and returns `E(x)`.
    fn state_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;

    /// `∇²ₓE`, when the energy is twice differentiable everywhere.
    fn laplacian(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn n_params(&self) -> usize {
        self.params().len()
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((sigmoid(-2.0) - 0.11920292202211755).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0), 0.0);
    }
}
