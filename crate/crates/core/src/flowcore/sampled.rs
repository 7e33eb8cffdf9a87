use rand::RngCore;
use serde::Serialize;

use crate::error::{check_dim, MpfError, Result};
use crate::flowcore::{clamped_exp, Proposal};
use crate::models::EnergyModel;
use crate::par::{map_chunks, CHUNK};
use crate::rng::{derived, MpfRng};
use crate::statespace::Dataset;

#[derive(Debug, Clone, Serialize)]
pub struct SampledObjective {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Monte Carlo standard error of `value`.
    pub std_err: f64,
    pub clamped: bool,
}

struct RowPart {
    mean: f64,
    var_of_mean: f64,
    weight: f64,
    grad: Vec<f64>,
    clamped: bool,
}

/// Monte Carlo flow objective with connections drawn from `proposal`:
/// for each row `j`, the average over `i ~ g(· ← j)` of
/// `(g_ji / g_ij)^½ exp(½(E_j - E_i))`, weighted over rows.
///
/// Each row uses its own random stream derived from one draw of `rng`.
pub fn sampled_mpf<M: EnergyModel + ?Sized>(
    model: &M,
    data: &Dataset,
    proposal: &dyn Proposal,
    samples_per_datum: usize,
    rng: &mut MpfRng,
) -> Result<SampledObjective> {
    check_dim(model.dim(), data.dim())?;
    check_dim(model.dim(), proposal.dim())?;
    if samples_per_datum == 0 {
        return Err(MpfError::InvalidArgument(
            "samples_per_datum must be positive".into(),
        ));
    }
    let base = rng.next_u64();
    let rows = data.weighted_binary_rows()?;
    let np = model.n_params();
    let s = samples_per_datum as f64;
    let parts = map_chunks(rows.len(), CHUNK, |range| -> Result<Vec<RowPart>> {
        let mut out = Vec::with_capacity(range.len());
        for r in range {
            let (x, w) = rows[r];
            let mut row_rng = derived(base, r as u64);
            let e_j = model.energy(x);
            let mut clamped = false;
            let mut grad = vec![0.0; np];
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..samples_per_datum {
                let y = proposal.propose(x, &mut row_rng);
                let g_fwd = proposal.density(&y, x);
                let g_back = proposal.density(x, &y);
                if !(g_fwd > 0.0) {
                    return Err(MpfError::InvalidArgument(
                        "proposal drew a state it assigns zero density".into(),
                    ));
                }
                if !(g_back > 0.0) {
                    return Err(MpfError::InvalidArgument(
                        "proposal is not reversible: reverse density is zero".into(),
                    ));
                }
                let t = (g_back / g_fwd).sqrt()
                    * clamped_exp(0.5 * (e_j - model.energy(&y)), &mut clamped);
                sum += t;
                sum_sq += t * t;
                model.add_param_grad(&y, -0.5 * w * t / s, &mut grad);
                model.add_param_grad(x, 0.5 * w * t / s, &mut grad);
            }
            let mean = sum / s;
            let var = if samples_per_datum > 1 {
                (sum_sq - s * mean * mean).max(0.0) / (s - 1.0)
            } else {
                0.0
            };
            out.push(RowPart {
                mean,
                var_of_mean: var / s,
                weight: w,
                grad,
                clamped,
            });
        }
        Ok(out)
    });
    let mut value = 0.0;
    let mut var = 0.0;
    let mut grad = vec![0.0; np];
    let mut clamped = false;
    for chunk in parts {
        for p in chunk? {
            value += p.weight * p.mean;
            var += p.weight * p.weight * p.var_of_mean;
            grad.iter_mut().zip(&p.grad).for_each(|(a, b)| *a += b);
            clamped |= p.clamped;
        }
    }
    Ok(SampledObjective {
        value,
        grad,
        std_err: var.sqrt(),
        clamped,
    })
}
