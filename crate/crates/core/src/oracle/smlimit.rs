use serde::Serialize;

use crate::baselines::sm_objective;
use crate::error::{MpfError, Result};
use crate::models::ContinuousEnergy;
use crate::statespace::Dataset;

/// With flow rate `exp(½(E(x) - E(x+α)))` and `α` uniform over a cube of side
/// `ε`, `K(ε) = ε^d + ε^{d+2}/48 (½|∇E|² - ∇²E) + O(ε^{d+4})`.
pub const SM_RESCALE: f64 = 48.0;

#[derive(Debug, Clone, Serialize)]
pub struct SmLimitRow {
    pub epsilon: f64,
    pub k_mpf: f64,
    pub rescaled: f64,
    /// `rescaled - K_SM`.
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmLimitReport {
    pub k_sm: f64,
    pub rows: Vec<SmLimitRow>,
    /// `error(ε_k) / error(ε_{k+1})` for consecutive rows.
    pub ratios: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `∫_{[-ε/2, ε/2]^d} (exp(½(E(x) - E(x+α))) - 1) dα` by tensor Gauss rule.
fn excess_flow(energy: &dyn ContinuousEnergy, x: &[f64], eps: f64, n: usize) -> f64 {
    let d = x.len();
    let (nodes, weights) = gauss_legendre(n);
    let half = 0.5 * eps;
    let e0 = energy.energy(x);
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..d {
            y[k] = x[k] + half * nodes[idx[k]];
            w *= half * weights[idx[k]];
        }
        total += w * (0.5 * (e0 - energy.energy(&y))).exp_m1();
        let mut k = 0;
        loop {
            if k == d {
                return total;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Compares the rescaled hypercube flow objective with the score-matching
/// objective for a sequence of cube sizes.
pub fn sm_limit_check(
    energy: &dyn ContinuousEnergy,
    data: &Dataset,
    eps_list: &[f64],
    nodes: usize,
) -> Result<SmLimitReport> {
    let d = energy.dim();
    if d > 3 {
        return Err(MpfError::InvalidArgument(format!(
            "cubature limited to d <= 3, got {d}"
        )));
    }
    if nodes < 8 {
        return Err(MpfError::InvalidArgument(
            "at least 8 nodes per axis are required".into(),
        ));
    }
    let rows = data.continuous_rows()?;
    let k_sm = sm_objective(energy, data)?;
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps > 0.0) {
            return Err(MpfError::InvalidArgument(format!("invalid ε = {eps}")));
        }
        let scale = SM_RESCALE / eps.powi(d as i32 + 2);
        let mean_excess = |n: usize| -> f64 {
            rows.iter()
                .enumerate()
                .map(|(j, x)| data.weight(j) * excess_flow(energy, x, eps, n))
                .sum()
        };
        let coarse = mean_excess(nodes);
        let fine = mean_excess(2 * nodes);
        if ((coarse - fine) * scale).abs() > 1e-8 {
            return Err(MpfError::Numerical(format!(
                "cubature not converged at ε = {eps}: {} vs {}",
                coarse * scale,
                fine * scale
            )));
        }
        let rescaled = fine * scale;
        out.push(SmLimitRow {
            epsilon: eps,
            k_mpf: eps.powi(d as i32) + fine,
            rescaled,
            error: rescaled - k_sm,
        });
    }
    let ratios = out.windows(2).map(|w| w[0].error / w[1].error).collect();
    Ok(SmLimitReport {
        k_sm,
        rows: out,
        ratios,
    })
}
