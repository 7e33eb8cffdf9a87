use std::collections::HashMap;

use serde::Serialize;

use crate::error::{check_dim, MpfError, Result};
use crate::flowcore::ConnectivityScheme;
use crate::models::EnergyModel;
use crate::oracle::{build_flow_matrix, model_distribution};
use crate::statespace::{encode_bits, BinaryState, Dataset};

#[derive(Debug, Clone, Serialize)]
pub struct BoundEntry {
    pub state: String,
    /// `log max(0, 1 - ṗ_i / (p_i(0) λ2))`; `-∞` when the argument is not positive.
    pub bound: f64,
    pub log_p_inf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralBoundReport {
    pub lambda2: f64,
    /// `max_i Γ_ii / (1 - p_i(∞))` over all states.
    pub lambda2_bound: f64,
    pub entries: Vec<BoundEntry>,
    /// `max_i (bound_i - log p_i(∞))`; nonpositive when the bound holds.
    pub worst_gap: f64,
}

impl SpectralBoundReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.worst_gap <= tol && self.lambda2_bound <= self.lambda2 + tol
    }
}

/// Lower bound on the log model probability of each data state from the
/// initial flow rate and the first nonzero eigenvalue of `Γ`.
pub fn spectral_bound<M: EnergyModel + ?Sized>(
    model: &M,
    scheme: &ConnectivityScheme,
    data: &Dataset,
) -> Result<SpectralBoundReport> {
    check_dim(model.dim(), data.dim())?;
    let flow = build_flow_matrix(model, scheme)?;
    let mut p0: HashMap<usize, (f64, &BinaryState)> = HashMap::new();
    for (x, w) in data.weighted_binary_rows()? {
        p0.entry(encode_bits(x)).or_insert((0.0, x)).0 += w;
    }
    let mut states: Vec<usize> = p0.keys().copied().collect();
    states.sort_unstable();
    for (a, &i) in states.iter().enumerate() {
        for &j in &states[a + 1..] {
            if flow.connected(i, j) || flow.connected(j, i) {
                return Err(MpfError::InvalidArgument(format!(
                    "data states {} and {} are directly connected",
                    p0[&i].1, p0[&j].1
                )));
            }
        }
    }

    let spectral = flow.spectral()?;
    let second = spectral.eigenvalues().get(1).copied().unwrap_or(0.0);
    let lambda2 = match spectral.lambda2() {
        Some(l) if second < -1e-12 => l,
        _ => {
            return Err(MpfError::Numerical(
                "second eigenvalue is zero: the connectivity is not ergodic".into(),
            ))
        }
    };

    let p_inf = model_distribution(model)?;
    let p_inf = p_inf.probs();
    let gamma = flow.gamma();

    let lambda2_bound = (0..p_inf.len())
        .filter(|&i| p_inf[i] < 1.0)
        .map(|i| gamma[(i, i)] / (1.0 - p_inf[i]))
        .fold(f64::NEG_INFINITY, f64::max);

    let mut worst_gap = f64::NEG_INFINITY;
    let entries = states
        .iter()
        .map(|&i| {
            let (p, x) = p0[&i];
            let rate = gamma[(i, i)] * p;
            let arg = 1.0 - rate / (p * lambda2);
            let bound = if arg > 0.0 {
                arg.ln()
            } else {
                f64::NEG_INFINITY
            };
            let log_p_inf = p_inf[i].ln();
            worst_gap = worst_gap.max(bound - log_p_inf);
            BoundEntry {
                state: x.to_string(),
                bound,
                log_p_inf,
            }
        })
        .collect();
    Ok(SpectralBoundReport {
        lambda2,
        lambda2_bound,
        entries,
        worst_gap,
    })
}
