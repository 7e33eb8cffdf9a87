//! Deterministic optimizers used by every fitting path.

mod lbfgs;
mod sgd;

pub use lbfgs::{lbfgs_minimize, LbfgsResult, LbfgsStatus, OptimizerConfig};
pub use sgd::{sgd_anneal, AnnealSchedule, SgdConfig, SgdResult};
