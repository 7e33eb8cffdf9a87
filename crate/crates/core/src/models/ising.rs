use crate::error::{check_dim, MpfError, Result};
use crate::models::EnergyModel;
use crate::rng::MpfRng;
use rand_distr::{Distribution, Normal};

/// Ising energy `E(x) = xᵀJx` with symmetric `J`; the diagonal holds the biases.
///
/// Only the upper triangle (diagonal included) is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    d: usize,
    j: Vec<f64>,
}

impl IsingModel {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            j: vec![0.0; d * (d + 1) / 2],
        }
    }

    pub fn n_params_for(d: usize) -> usize {
        d * (d + 1) / 2
    }

    pub fn from_packed(d: usize, packed: Vec<f64>) -> Result<Self> {
        check_dim(Self::n_params_for(d), packed.len())?;
        Ok(Self { d, j: packed })
    }

    /// From a full row-major matrix that must be exactly symmetric.
    pub fn from_full(d: usize, full: &[f64]) -> Result<Self> {
        check_dim(d * d, full.len())?;
        for a in 0..d {
            for b in (a + 1)..d {
                if full[a * d + b] != full[b * d + a] {
                    return Err(MpfError::InvalidArgument(format!(
                        "coupling matrix not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(d, full))
    }

    /// `J = ½(J′ + J′ᵀ)` from a possibly asymmetric row-major `J′`.
    pub fn from_asymmetric(d: usize, jp: &[f64]) -> Result<Self> {
        check_dim(d * d, jp.len())?;
        Ok(Self::symmetrized(d, jp))
    }

    fn symmetrized(d: usize, m: &[f64]) -> Self {
        let mut out = Self::zeros(d);
        for a in 0..d {
            for b in a..d {
                let v = 0.5 * (m[a * d + b] + m[b * d + a]);
                let k = out.idx(a, b);
                out.j[k] = v;
            }
        }
        out
    }

    /// Packed position of the unordered pair `(a, b)`.
    #[inline]
    pub fn idx(&self, a: usize, b: usize) -> usize {
        let (i, j) = if a <= b { (a, b) } else { (b, a) };
        // row i starts at i*d - i*(i-1)/2
        i * self.d - (i * i.saturating_sub(1)) / 2 + (j - i)
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.j[self.idx(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        let k = self.idx(a, b);
        self.j[k] = v;
    }

    pub fn packed(&self) -> &[f64] {
        &self.j
    }

    pub fn to_full(&self) -> Vec<f64> {
        let d = self.d;
        let mut m = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                m[a * d + b] = self.get(a, b);
            }
        }
        m
    }

    /// `J_nn + 2 Σ_{i≠n} J_in x_i`: the energy change of turning unit `n` on.
    pub fn on_field(&self, x: &[u8], n: usize) -> f64 {
        let mut s = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 1 && i != n {
                s += self.get(i, n);
            }
        }
        self.get(n, n) + 2.0 * s
    }
}

impl EnergyModel for IsingModel {
    fn dim(&self) -> usize {
        self.d
    }

    fn params(&self) -> &[f64] {
        &self.j
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        check_dim(self.j.len(), theta.len())?;
        self.j.copy_from_slice(theta);
        Ok(())
    }

    fn energy(&self, x: &[u8]) -> f64 {
        let d = self.d;
        let mut e = 0.0;
        let mut row = 0;
        for i in 0..d {
            if x[i] == 1 {
                let mut s = 0.0;
                for j in (i + 1)..d {
                    if x[j] == 1 {
                        s += self.j[row + j - i];
                    }
                }
                e += self.j[row] + 2.0 * s;
            }
            row += d - i;
        }
        e
    }

    fn add_param_grad(&self, x: &[u8], scale: f64, grad: &mut [f64]) {
        let d = self.d;
        let mut row = 0;
        for i in 0..d {
            if x[i] == 1 {
                grad[row] += scale;
                for j in (i + 1)..d {
                    if x[j] == 1 {
                        grad[row + j - i] += 2.0 * scale;
                    }
                }
            }
            row += d - i;
        }
    }

    // Energies by adding the highest set bit to an already computed state,
    // moments by summing probabilities over supersets.
    fn enumerated_expectation(&self) -> Option<(f64, Vec<f64>)> {
        let d = self.d;
        let n = 1usize << d;
        let mut e = vec![0.0; n];
        for i in 1..n {
            let t = (usize::BITS - 1 - i.leading_zeros()) as usize;
            let rest = i ^ (1 << t);
            let mut s = 0.0;
            let mut r = rest;
            while r != 0 {
                s += self.get(r.trailing_zeros() as usize, t);
                r &= r - 1;
            }
            e[i] = e[rest] + self.get(t, t) + 2.0 * s;
        }
        let min = e.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let mut p: Vec<f64> = e.iter().map(|v| (min - v).exp()).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= z);
        for k in 0..d {
            let bit = 1 << k;
            for m in 0..n {
                if m & bit == 0 {
                    p[m] += p[m | bit];
                }
            }
        }
        let mut grad = vec![0.0; self.j.len()];
        for a in 0..d {
            for b in a..d {
                grad[self.idx(a, b)] = if a == b {
                    p[1 << a]
                } else {
                    2.0 * p[(1 << a) | (1 << b)]
                };
            }
        }
        Some((z.ln() - min, grad))
    }

    fn flip_delta(&self, x: &[u8], n: usize) -> f64 {
        let f = self.on_field(x, n);
        if x[n] == 0 {
            f
        } else {
            -f
        }
    }
}

/// Nearest-neighbour couplings on a `rows x cols` open-boundary square lattice,
/// drawn from `N(0, σ²)`, with each diagonal entry set so its column sums to 0.
pub fn lattice_ising(
    rows: usize,
    cols: usize,
    sigma2: f64,
    rng: &mut MpfRng,
) -> Result<IsingModel> {
    if rows == 0 || cols == 0 || !(sigma2 >= 0.0) {
        return Err(MpfError::InvalidArgument(format!(
            "invalid lattice {rows}x{cols} with variance {sigma2}"
        )));
    }
    let normal =
        Normal::new(0.0, sigma2.sqrt()).map_err(|e| MpfError::InvalidArgument(e.to_string()))?;
    let d = rows * cols;
    let mut m = IsingModel::zeros(d);
    for r in 0..rows {
        for c in 0..cols {
            let a = r * cols + c;
            if c + 1 < cols {
                m.set(a, a + 1, normal.sample(rng));
            }
            if r + 1 < rows {
                m.set(a, a + cols, normal.sample(rng));
            }
        }
    }
    for a in 0..d {
        let off: f64 = (0..d).filter(|&b| b != a).map(|b| m.get(a, b)).sum();
        m.set(a, a, -off);
    }
    Ok(m)
}

/// Energy and packed-parameter gradient of an Ising model at `x`.
pub fn ising_energy(model: &IsingModel, x: &[u8]) -> Result<(f64, Vec<f64>)> {
    check_dim(model.d, x.len())?;
    Ok(model.energy_and_grad(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fd_gradient;
    use crate::rng::seeded;
    use crate::statespace::BinaryState;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_model(d: usize, rng: &mut impl Rng) -> IsingModel {
        let n = IsingModel::n_params_for(d);
        IsingModel::from_packed(d, (0..n).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
    }

    #[test]
    fn enumerated_expectation_matches_state_loop() {
        let mut rng = seeded(12);
        for d in 1..=7 {
            let m = random_model(d, &mut rng);
            let (log_z, mean) = m.enumerated_expectation().unwrap();
            let states: Vec<Vec<u8>> = (0..1usize << d)
                .map(|i| BinaryState::decode(i, d).unwrap().into_bits())
                .collect();
            let z: f64 = states.iter().map(|x| (-m.energy(x)).exp()).sum();
            assert!((log_z - z.ln()).abs() < 1e-12);
            let mut want = vec![0.0; m.n_params()];
            for x in &states {
                m.add_param_grad(x, (-m.energy(x)).exp() / z, &mut want);
            }
            for (a, b) in mean.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "d = {d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn packed_index_is_dense() {
        let m = IsingModel::zeros(5);
        let mut seen = [false; 15];
        for a in 0..5 {
            for b in a..5 {
                let k = m.idx(a, b);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(k, m.idx(b, a));
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(m.idx(0, 0), 0);
        assert_eq!(m.idx(1, 1), 5);
    }

    #[test]
    fn quadratic_form_example() {
        let m = IsingModel::from_full(2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        let (e, _) = ising_energy(&m, &[1, 1]).unwrap();
        assert_eq!(e, 8.0);
        assert_eq!(ising_energy(&m, &[0, 0]).unwrap().0, 0.0);
        assert!(ising_energy(&m, &[0, 0, 1]).is_err());
        assert!(IsingModel::from_full(2, &[1.0, 2.0, 2.5, 3.0]).is_err());
    }

    #[test]
    fn energy_matches_full_matrix_product() {
        let mut rng = seeded(1);
        let m = random_model(6, &mut rng);
        let full = m.to_full();
        for i in 0..64 {
            let x = BinaryState::decode(i, 6).unwrap();
            let mut e = 0.0;
            for a in 0..6 {
                for b in 0..6 {
                    e += x[a] as f64 * full[a * 6 + b] * x[b] as f64;
                }
            }
            assert!((m.energy(&x) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrization_invariance() {
        let mut rng = seeded(2);
        let jp: Vec<f64> = (0..16).map(|_| rng.sample(StandardNormal)).collect();
        let mut jt = vec![0.0; 16];
        for a in 0..4 {
            for b in 0..4 {
                jt[a * 4 + b] = jp[b * 4 + a];
            }
        }
        let m1 = IsingModel::from_asymmetric(4, &jp).unwrap();
        let m2 = IsingModel::from_asymmetric(4, &jt).unwrap();
        for i in 0..16 {
            let x = BinaryState::decode(i, 4).unwrap();
            assert_eq!(m1.energy(&x), m2.energy(&x));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let m = random_model(5, &mut rng);
            let x: Vec<u8> = (0..5).map(|_| rng.random_range(0..2)).collect();
            let (_, g) = ising_energy(&m, &x).unwrap();
            let fd = fd_gradient(
                |th| {
                    let mut mm = m.clone();
                    mm.set_params(th).unwrap();
                    mm.energy(&x)
                },
                m.params(),
                None,
            );
            let err = crate::oracle::rel_error(&g, &fd);
            assert!(err < 1e-7, "rel err {err}");
        }
    }

    #[test]
    fn lattice_columns_sum_to_zero() {
        let mut rng = seeded(5);
        let m = lattice_ising(4, 4, 10.0, &mut rng).unwrap();
        let full = m.to_full();
        for b in 0..16 {
            let s: f64 = (0..16).map(|a| full[a * 16 + b]).sum();
            assert!(s.abs() < 1e-12);
        }
        assert_eq!(m.get(0, 2), 0.0);
        assert_ne!(m.get(0, 1), 0.0);
        assert_ne!(m.get(0, 4), 0.0);
        assert!(lattice_ising(0, 4, 1.0, &mut rng).is_err());
    }

    #[test]
    fn lattice_is_flip_symmetric() {
        let mut rng = seeded(6);
        let m = lattice_ising(3, 3, 10.0, &mut rng).unwrap();
        for i in 0..512 {
            let x = BinaryState::decode(i, 9).unwrap();
            let y = x.complement();
            assert!((m.energy(&x) - m.energy(&y)).abs() < 1e-9);
        }
    }

    #[test]
    fn flip_delta_matches_energies() {
        let mut rng = seeded(4);
        let m = random_model(7, &mut rng);
        for i in 0..128 {
            let x = BinaryState::decode(i, 7).unwrap();
            for n in 0..7 {
                let y = x.bit_flip(n).unwrap();
                assert!((m.flip_delta(&x, n) - (m.energy(&y) - m.energy(&x))).abs() < 1e-12);
            }
        }
    }
}
