use std::path::Path;

use anyhow::Context;
use mpf_core::baselines::CdConfig;
use mpf_core::hopfield::{mpf_train_config, PER_MAX_EPOCHS, PER_RATE};
use mpf_core::{MpfOptions, OptimizerConfig, PmpfConfig};
use serde::{Deserialize, Serialize};

/// Settings that `--config` may override. Absent fields keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// L-BFGS settings for the Ising fits.
    pub optimizer: OptimizerConfig,
    /// L-BFGS settings for Hopfield training with the flow objective.
    pub hopfield_optimizer: OptimizerConfig,
    pub mpf: MpfOptions,
    /// Contrastive divergence schedule; the default depends on the dimension.
    pub cd: Option<CdConfig>,
    pub pmpf: PmpfConfig,
    pub per_rate: f64,
    pub per_max_epochs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::default(),
            hopfield_optimizer: mpf_train_config(),
            mpf: MpfOptions::default(),
            cd: None,
            pmpf: PmpfConfig::default(),
            per_rate: PER_RATE,
            per_max_epochs: PER_MAX_EPOCHS,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| {
            crate::UsageError(format!("invalid config {}: {e}", path.display())).into()
        })
    }

    /// The CD schedule for dimension `d` and `k` sweeps.
    pub fn cd_for(&self, d: usize, k: usize) -> CdConfig {
        let mut cfg = self.cd.unwrap_or_else(|| CdConfig::for_dim(d, k));
        cfg.k = k;
        cfg
    }
}
