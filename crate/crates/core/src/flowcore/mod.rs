//! Connectivity schemes and the probability-flow objectives.

mod ising;
mod objective;
mod pmpf;
mod proposal;
mod rbm;
mod sampled;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use ising::{fit_ising_mpf, ising_mpf};
pub use objective::{mpf_fit, mpf_objective};
pub use pmpf::{pmpf_fit, pmpf_objective, PmpfConfig, PmpfResult, PmpfStep};
pub use proposal::{IndependentFlip, Proposal, UniformBitFlip};
pub use rbm::rbm_mpf;
pub use sampled::{sampled_mpf, SampledObjective};

use crate::error::{MpfError, Result};
use crate::statespace::BinaryState;

/// Which states exchange probability.
#[derive(Debug, Clone)]
pub enum ConnectivityScheme {
    SingleBitFlip,
    /// Single bit flips plus the state with every bit flipped.
    SingleFlipPlusComplement,
    /// Continuous states within a cube of the given side length.
    EpsilonHypercube(f64),
    SampledProposal(Arc<dyn Proposal>),
}

impl ConnectivityScheme {
    pub fn is_discrete_deterministic(&self) -> bool {
        matches!(self, Self::SingleBitFlip | Self::SingleFlipPlusComplement)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SingleBitFlip => "single-bit-flip",
            Self::SingleFlipPlusComplement => "single-flip-plus-complement",
            Self::EpsilonHypercube(_) => "epsilon-hypercube",
            Self::SampledProposal(_) => "sampled-proposal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpfOptions {
    pub epsilon_scale: f64,
    /// Drop neighbours that are themselves data states.
    pub exclude_data_neighbors: bool,
}

impl Default for MpfOptions {
    fn default() -> Self {
        Self {
            epsilon_scale: 1.0,
            exclude_data_neighbors: false,
        }
    }
}

/// Objective value and gradient. `clamped` reports whether any exponent hit
/// the ±[`EXP_CLAMP`](crate::EXP_CLAMP) guard.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowObjective {
    pub value: f64,
    pub grad: Vec<f64>,
    pub clamped: bool,
}

pub(crate) fn clamped_exp(z: f64, clamped: &mut bool) -> f64 {
    if z.abs() > crate::EXP_CLAMP {
        *clamped = true;
        z.clamp(-crate::EXP_CLAMP, crate::EXP_CLAMP).exp()
    } else {
        z.exp()
    }
}

fn discrete_only(scheme: &ConnectivityScheme) -> Result<()> {
    if scheme.is_discrete_deterministic() {
        Ok(())
    } else {
        Err(MpfError::InvalidArgument(format!(
            "{} connectivity has no fixed neighbour list",
            scheme.name()
        )))
    }
}

/// Neighbours of `x`: the Hamming-1 states in dimension order, followed by
/// the complement for [`ConnectivityScheme::SingleFlipPlusComplement`].
pub fn neighbors(x: &BinaryState, scheme: &ConnectivityScheme) -> Result<Vec<BinaryState>> {
    discrete_only(scheme)?;
    let mut out: Vec<BinaryState> = (0..x.dim())
        .map(|n| {
            let mut b = x.bits().to_vec();
            b[n] ^= 1;
            BinaryState::from_bits_unchecked(b)
        })
        .collect();
    if matches!(scheme, ConnectivityScheme::SingleFlipPlusComplement) && x.dim() > 1 {
        out.push(x.complement());
    }
    Ok(out)
}

/// Neighbour indices of state `idx` in encoding order.
pub(crate) fn neighbor_indices(
    idx: usize,
    d: usize,
    scheme: &ConnectivityScheme,
) -> Result<Vec<usize>> {
    discrete_only(scheme)?;
    let mut out: Vec<usize> = (0..d).map(|n| idx ^ (1 << n)).collect();
    if matches!(scheme, ConnectivityScheme::SingleFlipPlusComplement) && d > 1 {
        out.push(idx ^ ((1 << d) - 1));
    }
    Ok(out)
}

/// Neighbour bit vectors of `x`, reusing the same layout as [`neighbors`].
pub(crate) fn neighbor_bits(x: &[u8], scheme: &ConnectivityScheme) -> Vec<Vec<u8>> {
    let d = x.len();
    let mut out: Vec<Vec<u8>> = (0..d)
        .map(|n| {
            let mut b = x.to_vec();
            b[n] ^= 1;
            b
        })
        .collect();
    if matches!(scheme, ConnectivityScheme::SingleFlipPlusComplement) && d > 1 {
        out.push(x.iter().map(|b| 1 - b).collect());
    }
    out
}
