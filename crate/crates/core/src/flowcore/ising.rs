use crate::error::{check_dim, Result};
use crate::flowcore::{clamped_exp, FlowObjective};
use crate::models::{EnergyModel, IsingModel};
use crate::optimize::{lbfgs_minimize, LbfgsResult, OptimizerConfig};
use crate::par::{map_chunks, GradAcc, CHUNK};
use crate::statespace::Dataset;

/// Flow objective of an Ising model `E(x) = xᵀJx`, `J = ½(J′ + J′ᵀ)`, under
/// single-bit-flip connectivity, optionally adding the all-bits-flipped state.
///
/// `jp` is the row-major `d x d` matrix `J′`; the gradient is over its entries.
/// The value is normalised by the data weights (`1/|D|` by default), so the
/// unnormalised sum is `value * |D|`.
pub fn ising_mpf(jp: &[f64], d: usize, data: &Dataset, allflip: bool) -> Result<FlowObjective> {
    check_dim(d * d, jp.len())?;
    check_dim(d, data.dim())?;
    let mut j = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            j[a * d + b] = 0.5 * (jp[a * d + b] + jp[b * d + a]);
        }
    }
    let rows = data.weighted_binary_rows()?;
    let parts = map_chunks(rows.len(), CHUNK, |range| {
        let mut acc = GradAcc::new(d * d);
        let mut field = vec![0.0; d];
        for &(x, w) in &rows[range] {
            // field[n] = Σ_{i≠n} J_in x_i
            for n in 0..d {
                field[n] = (0..d)
                    .filter(|&i| i != n && x[i] == 1)
                    .map(|i| j[i * d + n])
                    .sum();
            }
            for n in 0..d {
                let s = 2.0 * x[n] as f64 - 1.0;
                let t = clamped_exp(s * (field[n] + 0.5 * j[n * d + n]), &mut acc.clamped);
                acc.value += w * t;
                let c = 0.5 * w * t * s;
                acc.grad[n * d + n] += c;
                for b in (0..d).filter(|&b| b != n && x[b] == 1) {
                    acc.grad[n * d + b] += c;
                    acc.grad[b * d + n] += c;
                }
            }
            if allflip && d > 1 {
                // ½(xᵀJx - x̄ᵀJx̄) with x̄ = 1 - x
                let mut half_diff = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        let xx = (x[a] & x[b]) as f64;
                        let yy = ((1 - x[a]) & (1 - x[b])) as f64;
                        half_diff += j[a * d + b] * (xx - yy);
                    }
                }
                let t = clamped_exp(0.5 * half_diff, &mut acc.clamped);
                acc.value += w * t;
                let c = 0.5 * w * t;
                for a in 0..d {
                    for b in 0..d {
                        let xx = (x[a] & x[b]) as f64;
                        let yy = ((1 - x[a]) & (1 - x[b])) as f64;
                        acc.grad[a * d + b] += c * (xx - yy);
                    }
                }
            }
        }
        acc
    });
    let acc = GradAcc::sum(d * d, parts);
    Ok(FlowObjective {
        value: acc.value,
        grad: acc.grad,
        clamped: acc.clamped,
    })
}

/// Minimises [`ising_mpf`] over the packed symmetric couplings with L-BFGS.
pub fn fit_ising_mpf(
    init: &IsingModel,
    data: &Dataset,
    allflip: bool,
    cfg: &OptimizerConfig,
) -> Result<(IsingModel, LbfgsResult)> {
    let d = init.dim();
    check_dim(d, data.dim())?;
    let mut work = init.clone();
    let res = lbfgs_minimize(
        |p, g| {
            work.set_params(p).expect("packed length is fixed");
            match ising_mpf(&work.to_full(), d, data, allflip) {
                Ok(obj) => {
                    for a in 0..d {
                        for b in a..d {
                            let v = if a == b {
                                obj.grad[a * d + a]
                            } else {
                                obj.grad[a * d + b] + obj.grad[b * d + a]
                            };
                            g[work.idx(a, b)] = v;
                        }
                    }
                    obj.value
                }
                Err(_) => f64::NAN,
            }
        },
        init.packed(),
        cfg,
    )?;
    Ok((IsingModel::from_packed(d, res.x.clone())?, res))
}
