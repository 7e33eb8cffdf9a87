use nalgebra::DVector;
use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{MpfError, Result};
use crate::models::{ContinuousEnergy, EnergyModel, IcaModel};
use crate::oracle::model_distribution;
use crate::rng::MpfRng;
use crate::samplers::{gibbs_chain, GibbsConfig};
use crate::statespace::{check_enumerable, BinaryState, Dataset, TabularDistribution};
use crate::ENUMERATION_CAP;

/// How a set of samples or a statistic was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Exact,
    Sampled,
}

/// Independent draws from a tabulated distribution.
pub fn exact_sample(
    dist: &TabularDistribution,
    count: usize,
    rng: &mut MpfRng,
) -> Result<Vec<BinaryState>> {
    let d = dist.dim();
    check_enumerable(d)?;
    let index =
        WeightedIndex::new(dist.probs()).map_err(|e| MpfError::InvalidWeights(e.to_string()))?;
    Ok((0..count)
        .map(|_| BinaryState::decode(index.sample(rng), d).expect("index below 2^d"))
        .collect())
}

/// Standard Laplace draw by inverse transform.
pub fn laplace(rng: &mut MpfRng) -> f64 {
    let u: f64 = rng.random_range(-0.5..0.5);
    -u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// `x = J⁻¹ s` with `s` iid standard Laplace, which is exactly the ICA model density.
pub fn sample_ica(model: &IcaModel, count: usize, rng: &mut MpfRng) -> Result<Dataset> {
    let k = model.dim();
    let inv = model.matrix().try_inverse().ok_or(MpfError::Singular)?;
    let rows = (0..count)
        .map(|_| {
            let s = DVector::from_fn(k, |_, _| laplace(rng));
            (&inv * s).as_slice().to_vec()
        })
        .collect();
    Dataset::continuous(k, rows)
}

/// Samples from `p ∝ exp(-E)`: exact below the enumeration cap, Gibbs above.
pub fn sample_model<M: EnergyModel + ?Sized>(
    model: &M,
    count: usize,
    rng: &mut MpfRng,
) -> Result<(Vec<BinaryState>, SampleMode)> {
    if model.dim() <= ENUMERATION_CAP {
        let dist = model_distribution(model)?;
        Ok((exact_sample(&dist, count, rng)?, SampleMode::Exact))
    } else {
        Ok((
            gibbs_chain(model, count, &GibbsConfig::default(), rng),
            SampleMode::Sampled,
        ))
    }
}
