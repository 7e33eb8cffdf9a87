//! Hopfield networks: energy, asynchronous dynamics, the flow objective and
//! classical training rules, and the capacity and denoising experiments.

mod experiments;
mod objective;
mod train;

pub use experiments::{
    capacity_experiment, corrupted_storage_experiment, denoise_experiment, random_patterns,
    CorruptedStorage, CurveRow, HopfieldMethod, MAX_UNITS, PER_MAX_EPOCHS, PER_RATE, RECALL_SWEEPS,
};
pub use objective::{hopfield_mpf_objective, online_mpf_update, HopfieldObjective};
pub use train::{mpf_train, mpf_train_config, opr_train, per_train, PerResult};

use serde::Serialize;

use crate::error::{check_dim, MpfError, Result};

/// Symmetric zero-diagonal weights `J` and thresholds `θ`;
/// `E(x) = -½ xᵀJx + θᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldNet {
    n: usize,
    j: Vec<f64>,
    theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Converged {
    pub state: Vec<u8>,
    pub sweeps: usize,
    pub converged: bool,
}

impl HopfieldNet {
    /// `j` is row-major `n x n` and must be exactly symmetric with zero diagonal.
    pub fn new(n: usize, j: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        check_dim(n * n, j.len())?;
        check_dim(n, theta.len())?;
        for a in 0..n {
            if j[a * n + a] != 0.0 {
                return Err(MpfError::InvalidArgument(format!(
                    "weight diagonal entry {a} is nonzero"
                )));
            }
            for b in a + 1..n {
                if j[a * n + b] != j[b * n + a] {
                    return Err(MpfError::InvalidArgument(format!(
                        "weights not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        if j.iter().chain(&theta).any(|v| !v.is_finite()) {
            return Err(MpfError::NonFinite("Hopfield parameters".into()));
        }
        Ok(Self { n, j, theta })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            j: vec![0.0; n * n],
            theta: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.j
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.j[a * self.n + b]
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.theta
    }

    /// Number of free parameters: the strict upper triangle of `J`, then `θ`.
    pub fn n_params_for(n: usize) -> usize {
        n * (n - 1) / 2 + n
    }

    /// Flat parameters: `J_ab` for `a < b` row-major, followed by `θ`.
    pub fn to_params(&self) -> Vec<f64> {
        let n = self.n;
        let mut p = Vec::with_capacity(Self::n_params_for(n));
        for a in 0..n {
            for b in a + 1..n {
                p.push(self.j[a * n + b]);
            }
        }
        p.extend_from_slice(&self.theta);
        p
    }

    pub fn from_params(n: usize, p: &[f64]) -> Result<Self> {
        check_dim(Self::n_params_for(n), p.len())?;
        let mut j = vec![0.0; n * n];
        let mut k = 0;
        for a in 0..n {
            for b in a + 1..n {
                j[a * n + b] = p[k];
                j[b * n + a] = p[k];
                k += 1;
            }
        }
        Self::new(n, j, p[k..].to_vec())
    }

    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        check_dim(self.n, x.len())?;
        let n = self.n;
        let mut e = 0.0;
        for a in (0..n).filter(|&a| x[a] == 1) {
            e += self.theta[a];
            for b in (0..n).filter(|&b| x[b] == 1) {
                e -= 0.5 * self.j[a * n + b];
            }
        }
        Ok(e)
    }

    /// `J_i x - θ_i`.
    pub fn local_field(&self, x: &[u8], i: usize) -> f64 {
        let row = &self.j[i * self.n..(i + 1) * self.n];
        row.iter()
            .zip(x)
            .filter(|(_, &xb)| xb == 1)
            .map(|(w, _)| w)
            .sum::<f64>()
            - self.theta[i]
    }

    /// One ascending sweep `x_i ← H(J_i x - θ_i)` with `H(r) = 1` iff `r > 0`.
    /// Returns whether any unit changed.
    pub fn dynamics_step(&self, x: &mut [u8]) -> Result<bool> {
        check_dim(self.n, x.len())?;
        let mut changed = false;
        for i in 0..self.n {
            let new = u8::from(self.local_field(x, i) > 0.0);
            if new != x[i] {
                x[i] = new;
                changed = true;
            }
        }
        Ok(changed)
    }

    /// Sweeps until a sweep changes nothing or `max_sweeps` is reached.
    pub fn converge(&self, x: &[u8], max_sweeps: usize) -> Result<Converged> {
        let mut state = x.to_vec();
        let mut sweeps = 0;
        while sweeps < max_sweeps {
            sweeps += 1;
            if !self.dynamics_step(&mut state)? {
                return Ok(Converged {
                    state,
                    sweeps,
                    converged: true,
                });
            }
        }
        Ok(Converged {
            state,
            sweeps,
            converged: false,
        })
    }

    pub fn is_fixed_point(&self, x: &[u8]) -> Result<bool> {
        check_dim(self.n, x.len())?;
        Ok((0..self.n).all(|i| u8::from(self.local_field(x, i) > 0.0) == x[i]))
    }
}
