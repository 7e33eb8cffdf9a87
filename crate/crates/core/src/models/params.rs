use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, MpfError, Result};
use crate::hopfield::HopfieldNet;
use crate::models::{IcaModel, IsingModel, RbmModel};

/// On-disk parameter file. Matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Ising {
        d: usize,
        #[serde(rename = "J")]
        j: Vec<Vec<f64>>,
    },
    Rbm {
        d: usize,
        n_hidden: usize,
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
    },
    Ica {
        d: usize,
        #[serde(rename = "J")]
        j: Vec<Vec<f64>>,
    },
    Hopfield {
        d: usize,
        #[serde(rename = "J")]
        j: Vec<Vec<f64>>,
        theta: Vec<f64>,
    },
}

fn nest(flat: &[f64], cols: usize) -> Vec<Vec<f64>> {
    flat.chunks_exact(cols.max(1)).map(|c| c.to_vec()).collect()
}

fn flatten(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<Vec<f64>> {
    check_dim(nrows, rows.len())?;
    let mut out = Vec::with_capacity(nrows * ncols);
    for r in rows {
        check_dim(ncols, r.len())?;
        out.extend_from_slice(r);
    }
    Ok(out)
}

impl ModelParams {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Ising { .. } => "ising",
            Self::Rbm { .. } => "rbm",
            Self::Ica { .. } => "ica",
            Self::Hopfield { .. } => "hopfield",
        }
    }

    pub fn from_ising(m: &IsingModel) -> Self {
        use crate::models::EnergyModel;
        let d = m.dim();
        Self::Ising {
            d,
            j: nest(&m.to_full(), d),
        }
    }

    pub fn from_rbm(m: &RbmModel) -> Self {
        use crate::models::EnergyModel;
        Self::Rbm {
            d: m.dim(),
            n_hidden: m.n_hidden(),
            w: nest(m.weights(), m.dim()),
        }
    }

    pub fn from_ica(m: &IcaModel) -> Self {
        use crate::models::ContinuousEnergy;
        Self::Ica {
            d: m.dim(),
            j: nest(m.params(), m.dim()),
        }
    }

    pub fn from_hopfield(net: &HopfieldNet) -> Self {
        Self::Hopfield {
            d: net.n(),
            j: nest(net.weights(), net.n()),
            theta: net.thresholds().to_vec(),
        }
    }

    pub fn to_ising(&self) -> Result<IsingModel> {
        match self {
            Self::Ising { d, j } => IsingModel::from_full(*d, &flatten(j, *d, *d)?),
            other => Err(wrong_kind("ising", other)),
        }
    }

    pub fn to_rbm(&self) -> Result<RbmModel> {
        match self {
            Self::Rbm { d, n_hidden, w } => {
                RbmModel::new(*n_hidden, *d, flatten(w, *n_hidden, *d)?)
            }
            other => Err(wrong_kind("rbm", other)),
        }
    }

    pub fn to_ica(&self) -> Result<IcaModel> {
        match self {
            Self::Ica { d, j } => IcaModel::new(*d, flatten(j, *d, *d)?),
            other => Err(wrong_kind("ica", other)),
        }
    }

    pub fn to_hopfield(&self) -> Result<HopfieldNet> {
        match self {
            Self::Hopfield { d, j, theta } => {
                HopfieldNet::new(*d, flatten(j, *d, *d)?, theta.clone())
            }
            other => Err(wrong_kind("hopfield", other)),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn wrong_kind(want: &str, got: &ModelParams) -> MpfError {
    MpfError::InvalidArgument(format!("expected {want} parameters, found {}", got.kind()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::EnergyModel;

    #[test]
    fn json_shape_and_full_precision() {
        let mut m = IsingModel::zeros(2);
        m.set(0, 1, 0.1 + 0.2);
        m.set(1, 1, -1.0 / 3.0);
        let p = ModelParams::from_ising(&m);
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.starts_with(r#"{"model":"ising","d":2,"J":[[0.0,0.30000000000000004]"#));
        let back: ModelParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_ising().unwrap(), m);
        assert!(back.to_rbm().is_err());
    }

    #[test]
    fn rbm_and_ica_round_trip() {
        let r = RbmModel::new(2, 3, vec![0.1, -0.2, 0.3, 1e-17, 5.0, -6.5]).unwrap();
        let p = ModelParams::from_rbm(&r);
        let back: ModelParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back.to_rbm().unwrap().params(), r.params());

        let i = IcaModel::new(2, vec![1.0, 0.5, -0.25, 2.0]).unwrap();
        let p = ModelParams::from_ica(&i);
        let back: ModelParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back.to_ica().unwrap(), i);
    }

    #[test]
    fn ragged_matrix_rejected() {
        let text = r#"{"model":"ising","d":2,"J":[[0.0,1.0],[1.0]]}"#;
        let p: ModelParams = serde_json::from_str(text).unwrap();
        assert!(p.to_ising().is_err());
    }
}
