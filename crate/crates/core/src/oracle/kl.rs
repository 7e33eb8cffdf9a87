use serde::Serialize;

use crate::error::{check_dim, MpfError, Result};
use crate::flowcore::{mpf_objective, ConnectivityScheme, MpfOptions};
use crate::models::EnergyModel;
use crate::oracle::build_flow_matrix;
use crate::statespace::{empirical_distribution, Dataset};

#[derive(Debug, Clone, Serialize)]
pub struct KlFlowReport {
    /// Flow objective with data neighbours excluded and `ε = 1`.
    pub k_strict: f64,
    /// `Σ_{i∉D} Σ_{j∈D} Γ_ij p_j(0)` read from the dense matrix.
    pub flow_sum: f64,
    /// `d/dt KL(p(0) ‖ p(t))` at `t = 0` by central differences.
    pub kl_rate: f64,
    pub flow_residual: f64,
    pub rate_rel_residual: f64,
}

const KL_STEP: f64 = 1e-6;

/// Checks that the strict objective is the initial flow out of the data states
/// and the initial growth rate of `KL(p(0) ‖ p(t))`.
pub fn kl_flow_check<M: EnergyModel + ?Sized>(
    model: &M,
    data: &Dataset,
    scheme: &ConnectivityScheme,
) -> Result<KlFlowReport> {
    check_dim(model.dim(), data.dim())?;
    if model.dim() > 10 {
        return Err(MpfError::EnumerationCap {
            d: model.dim(),
            cap: 10,
        });
    }
    let opts = MpfOptions {
        epsilon_scale: 1.0,
        exclude_data_neighbors: true,
    };
    let k_strict = mpf_objective(model, data, scheme, &opts)?.value;

    let flow = build_flow_matrix(model, scheme)?;
    let p0 = empirical_distribution(data)?;
    let probs = p0.probs();
    let support: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
    let gamma = flow.gamma();
    let mut flow_sum = 0.0;
    for i in (0..probs.len()).filter(|&i| probs[i] == 0.0) {
        for &j in &support {
            flow_sum += gamma[(i, j)] * probs[j];
        }
    }

    let spectral = flow.spectral()?;
    // only data states enter the divergence, since p(0) vanishes elsewhere
    let kl = |t: f64| -> f64 {
        let delta = spectral.evolve_delta(probs, t);
        -support
            .iter()
            .map(|&i| probs[i] * (delta[i] / probs[i]).ln_1p())
            .sum::<f64>()
    };
    let kl_rate = (kl(KL_STEP) - kl(-KL_STEP)) / (2.0 * KL_STEP);

    let rate_rel_residual = if k_strict == 0.0 {
        kl_rate.abs()
    } else {
        (k_strict - kl_rate).abs() / k_strict.abs()
    };
    Ok(KlFlowReport {
        k_strict,
        flow_sum,
        kl_rate,
        flow_residual: (k_strict - flow_sum).abs(),
        rate_rel_residual,
    })
}
