//! Competing estimators: exact maximum likelihood, pseudolikelihood,
//! contrastive divergence and the score-matching objective.

mod cd;
mod ml;
mod pl;
mod sm;

pub use cd::{cd_fit, cd_fit_rbm, cd_phase_gap, CdConfig};
pub use ml::{exact_ml_fit, ica_ml_fit, MlFit};
pub use pl::{pl_conditional, pl_fit, pl_objective};
pub use sm::sm_objective;
