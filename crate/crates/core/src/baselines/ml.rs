use crate::error::Result;
use crate::models::{ica_loglik, ContinuousEnergy, EnergyModel, IcaModel};
use crate::optimize::{lbfgs_minimize, LbfgsResult, LbfgsStatus, OptimizerConfig};
use crate::oracle::exact_nll_and_grad;
use crate::statespace::Dataset;

#[derive(Debug, Clone)]
pub struct MlFit<M> {
    pub model: M,
    pub result: LbfgsResult,
    /// Set when the optimizer did not converge or the likelihood keeps
    /// improving far beyond the returned point (no finite maximiser).
    pub diverged: bool,
}

/// Length of the step used to probe for a direction of unbounded improvement.
const RECESSION_PROBE: f64 = 10.0;

/// Maximises the exact mean log-likelihood (enumerating all states) with L-BFGS.
pub fn exact_ml_fit<M: EnergyModel + Clone>(
    init: M,
    data: &Dataset,
    cfg: &OptimizerConfig,
) -> Result<MlFit<M>> {
    exact_nll_and_grad(&init, data)?;
    let mut work = init.clone();
    let mut nll = |th: &[f64], g: &mut [f64]| -> f64 {
        if work.set_params(th).is_err() {
            return f64::NAN;
        }
        match exact_nll_and_grad(&work, data) {
            Ok((f, grad)) => {
                g.copy_from_slice(&grad);
                f
            }
            Err(_) => f64::NAN,
        }
    };
    let result = lbfgs_minimize(&mut nll, init.params(), cfg)?;

    let gnorm = result.grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut recedes = false;
    if gnorm > 0.0 {
        let probe: Vec<f64> = result
            .x
            .iter()
            .zip(&result.grad)
            .map(|(x, g)| x - RECESSION_PROBE * g / gnorm)
            .collect();
        let mut scratch = vec![0.0; probe.len()];
        let f_probe = nll(&probe, &mut scratch);
        recedes = f_probe.is_finite() && f_probe < result.f - 1e-12 * result.f.abs().max(1.0);
    }
    let diverged = result.status != LbfgsStatus::Converged || recedes;
    let mut model = init;
    model.set_params(&result.x)?;
    Ok(MlFit {
        model,
        result,
        diverged,
    })
}

/// Maximises the exact ICA log-likelihood with L-BFGS.
pub fn ica_ml_fit(
    init: IcaModel,
    data: &Dataset,
    cfg: &OptimizerConfig,
) -> Result<(IcaModel, LbfgsResult)> {
    ica_loglik(&init, data)?;
    let k = init.dim();
    let res = lbfgs_minimize(
        |p, g| match IcaModel::new(k, p.to_vec()).and_then(|m| ica_loglik(&m, data)) {
            Ok((l, grad)) => {
                for (gi, v) in g.iter_mut().zip(grad) {
                    *gi = -v;
                }
                -l
            }
            Err(_) => f64::NAN,
        },
        init.params(),
        cfg,
    )?;
    Ok((IcaModel::new(k, res.x.clone())?, res))
}
