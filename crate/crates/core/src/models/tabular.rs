use crate::error::{check_dim, MpfError, Result};
use crate::models::EnergyModel;
use crate::statespace::encode_bits;
use crate::ENUMERATION_CAP;

/// Free-form energy: one parameter per state.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularModel {
    d: usize,
    table: Vec<f64>,
}

impl TabularModel {
    pub fn new(table: Vec<f64>) -> Result<Self> {
        let n = table.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(MpfError::InvalidArgument(format!(
                "table size {n} is not a power of two"
            )));
        }
        let d = n.trailing_zeros() as usize;
        if d > ENUMERATION_CAP {
            return Err(MpfError::EnumerationCap {
                d,
                cap: ENUMERATION_CAP,
            });
        }
        Ok(Self { d, table })
    }

    pub fn from_model<M: EnergyModel + ?Sized>(model: &M) -> Result<Self> {
        Self::new(crate::oracle::energy_table(model)?)
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }
}

impl EnergyModel for TabularModel {
    fn dim(&self) -> usize {
        self.d
    }

    fn params(&self) -> &[f64] {
        &self.table
    }

    fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        check_dim(self.table.len(), theta.len())?;
        self.table.copy_from_slice(theta);
        Ok(())
    }

    fn energy(&self, x: &[u8]) -> f64 {
        self.table[encode_bits(x)]
    }

    fn add_param_grad(&self, x: &[u8], scale: f64, grad: &mut [f64]) {
        grad[encode_bits(x)] += scale;
    }
}

/// `table[encode(x)]`.
pub fn tabular_energy(table: &[f64], x: &[u8]) -> Result<f64> {
    let m = TabularModel::new(table.to_vec())?;
    check_dim(m.d, x.len())?;
    Ok(m.energy(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::IsingModel;
    use crate::rng::seeded;
    use crate::statespace::BinaryState;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn zeros_and_size_check() {
        assert_eq!(tabular_energy(&[0.0; 8], &[1, 0, 1]).unwrap(), 0.0);
        assert!(tabular_energy(&[0.0; 6], &[1, 0, 1]).is_err());
        assert!(tabular_energy(&[0.0; 8], &[1, 0]).is_err());
    }

    #[test]
    fn matches_ising_everywhere() {
        let mut rng = seeded(12);
        let ising =
            IsingModel::from_packed(6, (0..21).map(|_| rng.sample(StandardNormal)).collect())
                .unwrap();
        let tab = TabularModel::from_model(&ising).unwrap();
        for i in 0..64 {
            let x = BinaryState::decode(i, 6).unwrap();
            assert_eq!(tab.energy(&x), ising.energy(&x));
        }
    }

    #[test]
    fn point_update() {
        let mut rng = seeded(13);
        let table: Vec<f64> = (0..16).map(|_| rng.random()).collect();
        let mut t2 = table.clone();
        t2[9] += 1.0;
        let a = TabularModel::new(table).unwrap();
        let b = TabularModel::new(t2).unwrap();
        let changed = (0..16)
            .filter(|&i| {
                let x = BinaryState::decode(i, 4).unwrap();
                a.energy(&x) != b.energy(&x)
            })
            .collect::<Vec<_>>();
        assert_eq!(changed, vec![9]);
    }
}
