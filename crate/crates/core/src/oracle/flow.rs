use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, MpfError, Result};
use crate::flowcore::{neighbor_indices, ConnectivityScheme};
use crate::models::EnergyModel;
use crate::oracle::energy_table;
use crate::statespace::TabularDistribution;

/// Largest dimension for which the dense flow matrix is built.
pub const FLOW_CAP: usize = 12;

/// Dense transition-rate matrix `Γ_ij = g_ij exp(½(E_j - E_i))` with
/// `Γ_jj = -Σ_{i≠j} Γ_ij`, so columns sum to zero.
#[derive(Debug, Clone)]
pub struct FlowMatrix {
    d: usize,
    energies: Vec<f64>,
    adjacency: DMatrix<f64>,
    gamma: DMatrix<f64>,
}

pub fn build_flow_matrix<M: EnergyModel + ?Sized>(
    model: &M,
    scheme: &ConnectivityScheme,
) -> Result<FlowMatrix> {
    if model.dim() > FLOW_CAP {
        return Err(MpfError::EnumerationCap {
            d: model.dim(),
            cap: FLOW_CAP,
        });
    }
    FlowMatrix::from_energies(model.dim(), energy_table(model)?, scheme)
}

impl FlowMatrix {
    pub fn from_energies(
        d: usize,
        energies: Vec<f64>,
        scheme: &ConnectivityScheme,
    ) -> Result<Self> {
        if d > FLOW_CAP {
            return Err(MpfError::EnumerationCap { d, cap: FLOW_CAP });
        }
        let n = 1usize << d;
        check_dim(n, energies.len())?;
        let mut adjacency = DMatrix::zeros(n, n);
        let mut gamma = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in neighbor_indices(j, d, scheme)? {
                adjacency[(i, j)] = 1.0;
                gamma[(i, j)] = (0.5 * (energies[j] - energies[i])).exp();
            }
        }
        for j in 0..n {
            let out: f64 = (0..n).filter(|&i| i != j).map(|i| gamma[(i, j)]).sum();
            gamma[(j, j)] = -out;
        }
        Ok(Self {
            d,
            energies,
            adjacency,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.adjacency[(i, j)] != 0.0
    }

    /// `p(t) = exp(Γ t) p(0)` applied to a vector: `Γ p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (&self.gamma * DVector::from_row_slice(p))
            .as_slice()
            .to_vec()
    }

    pub fn column_sum_residual(&self) -> f64 {
        (0..self.n_states())
            .map(|j| self.gamma.column(j).sum().abs())
            .fold(0.0, f64::max)
    }

    /// `max |Γ_ji p_i - Γ_ij p_j|`.
    pub fn detailed_balance_residual(&self, p: &[f64]) -> f64 {
        let n = self.n_states();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let r = self.gamma[(j, i)] * p[i] - self.gamma[(i, j)] * p[j];
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    /// `‖Γ p‖∞`.
    pub fn stationary_residual(&self, p: &[f64]) -> f64 {
        self.apply(p).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        SpectralDecomposition::new(self)
    }
}

/// Eigendecomposition of the symmetric matrix `B = V⁻¹ΓV`, `V_ii = exp(-½E_i)`.
///
/// Off the diagonal `B_ij = g_ij`; the diagonal equals that of `Γ`. Energies
/// are shifted by their minimum before forming `V`, which only rescales `V`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
    v: Vec<f64>,
}

impl SpectralDecomposition {
    fn new(flow: &FlowMatrix) -> Result<Self> {
        let n = flow.n_states();
        let mut b = flow.adjacency.clone();
        for i in 0..n {
            b[(i, i)] = flow.gamma[(i, i)];
        }
        let eig = SymmetricEigen::new(b);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
        let mut eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(MpfError::Numerical("eigendecomposition failed".into()));
        }
        // the top eigenvalue is zero analytically
        if eigenvalues[0].abs() < 1e-10 {
            eigenvalues[0] = 0.0;
        }
        let min = flow.energies.iter().fold(f64::INFINITY, |m, &e| m.min(e));
        let v = flow
            .energies
            .iter()
            .map(|e| (-0.5 * (e - min)).exp())
            .collect();
        Ok(Self {
            eigenvalues,
            vectors,
            v,
        })
    }

    /// Sorted in decreasing order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unit eigenvectors of `B`, one per column, in eigenvalue order.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// The largest eigenvalue strictly below `-1e-10`.
    pub fn lambda2(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().find(|&l| l < -1e-10)
    }

    /// Stationary distribution read off the first eigenvector of `Γ`.
    pub fn stationary(&self) -> Vec<f64> {
        let col = self.vectors.column(0);
        let mut p: Vec<f64> = self.v.iter().zip(col.iter()).map(|(v, u)| v * u).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        p
    }

    /// `p(t) - p(0)`, for any sign of `t`.
    pub(crate) fn evolve_delta(&self, p0: &[f64], t: f64) -> Vec<f64> {
        let n = self.v.len();
        let q = DVector::from_iterator(n, p0.iter().zip(&self.v).map(|(p, v)| p / v));
        let mut c = self.vectors.tr_mul(&q);
        for (ck, lam) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= (lam * t).exp_m1();
        }
        let u = &self.vectors * c;
        u.iter().zip(&self.v).map(|(x, v)| x * v).collect()
    }

    /// `p(t) = exp(Γt) p(0)` for `t ≥ 0`; round-off negatives are clipped to zero.
    pub fn evolve(&self, p0: &TabularDistribution, t: f64) -> Result<TabularDistribution> {
        check_dim(self.v.len(), p0.probs().len())?;
        if !(t >= 0.0) {
            return Err(MpfError::InvalidArgument(format!(
                "evolution time must be nonnegative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(p0.clone());
        }
        let delta = self.evolve_delta(p0.probs(), t);
        let probs = p0
            .probs()
            .iter()
            .zip(&delta)
            .map(|(p, dp)| (p + dp).max(0.0))
            .collect();
        Ok(TabularDistribution::from_probs_unchecked(p0.dim(), probs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{IsingModel, TabularModel};
    use crate::oracle::model_distribution;
    use crate::rng::seeded;
    use rand::Rng;

    fn random_ising(d: usize, scale: f64, seed: u64) -> IsingModel {
        let mut rng = seeded(seed);
        let p = (0..IsingModel::n_params_for(d))
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        IsingModel::from_packed(d, p).unwrap()
    }

    #[test]
    fn flat_energies_give_hypercube_adjacency() {
        let m = TabularModel::new(vec![0.0; 8]).unwrap();
        let f = build_flow_matrix(&m, &ConnectivityScheme::SingleBitFlip).unwrap();
        for i in 0..8usize {
            for j in 0..8usize {
                if i != j {
                    let expect = if (i ^ j).count_ones() == 1 { 1.0 } else { 0.0 };
                    assert_eq!(f.gamma()[(i, j)], expect);
                }
            }
            assert_eq!(f.gamma()[(i, i)], -3.0);
        }
    }

    #[test]
    fn invariants_on_random_ising() {
        for seed in 0..5 {
            let m = random_ising(6, 1.0, seed);
            for scheme in [
                ConnectivityScheme::SingleBitFlip,
                ConnectivityScheme::SingleFlipPlusComplement,
            ] {
                let f = build_flow_matrix(&m, &scheme).unwrap();
                let p = model_distribution(&m).unwrap();
                assert!(f.column_sum_residual() < 1e-12);
                assert!(f.detailed_balance_residual(p.probs()) < 1e-12);
                assert!(f.stationary_residual(p.probs()) < 1e-10);
                for i in 0..f.n_states() {
                    for j in 0..f.n_states() {
                        if i != j {
                            assert!(f.gamma()[(i, j)] >= 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn constant_shift_leaves_gamma_unchanged() {
        let m = random_ising(4, 1.0, 9);
        let table = energy_table(&m).unwrap();
        let shifted: Vec<f64> = table.iter().map(|e| e + 3.7).collect();
        let a = FlowMatrix::from_energies(4, table, &ConnectivityScheme::SingleBitFlip).unwrap();
        let b = FlowMatrix::from_energies(4, shifted, &ConnectivityScheme::SingleBitFlip).unwrap();
        assert!((a.gamma() - b.gamma()).amax() < 1e-12);
    }

    #[test]
    fn spectrum_and_stationary_vector() {
        let m = random_ising(5, 1.0, 2);
        let f = build_flow_matrix(&m, &ConnectivityScheme::SingleBitFlip).unwrap();
        let s = f.spectral().unwrap();
        assert_eq!(s.eigenvalues()[0], 0.0);
        assert!(s.eigenvalues()[1..].iter().all(|&l| l < 0.0));
        let p = model_distribution(&m).unwrap();
        let st = s.stationary();
        for (a, b) in st.iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn evolve_conserves_mass_and_converges() {
        let m = random_ising(4, 0.5, 4);
        let f = build_flow_matrix(&m, &ConnectivityScheme::SingleBitFlip).unwrap();
        let s = f.spectral().unwrap();
        let mut probs = vec![0.0; 16];
        probs[3] = 0.7;
        probs[12] = 0.3;
        let p0 = TabularDistribution::new(4, probs).unwrap();
        assert_eq!(s.evolve(&p0, 0.0).unwrap(), p0);
        for t in [0.1, 1.0, 10.0] {
            let pt = s.evolve(&p0, t).unwrap();
            assert!((pt.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let late = s.evolve(&p0, 1e6).unwrap();
        let pinf = model_distribution(&m).unwrap();
        assert!(late.max_abs_diff(&pinf) < 1e-8);
        assert!(s.evolve(&p0, -1.0).is_err());
    }

    #[test]
    fn evolve_matches_taylor_step() {
        let m = random_ising(3, 1.0, 5);
        let f = build_flow_matrix(&m, &ConnectivityScheme::SingleBitFlip).unwrap();
        let s = f.spectral().unwrap();
        let p0 = TabularDistribution::uniform(3).unwrap();
        let dt = 1e-7;
        let delta = s.evolve_delta(p0.probs(), dt);
        let rate = f.apply(p0.probs());
        for (a, b) in delta.iter().zip(rate) {
            assert!((a / dt - b).abs() < 1e-5);
        }
    }

    #[test]
    fn cap_enforced() {
        let m = IsingModel::zeros(13);
        assert!(build_flow_matrix(&m, &ConnectivityScheme::SingleBitFlip).is_err());
    }
}
