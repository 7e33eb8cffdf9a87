//! Parameter estimation for energy-based models by minimum probability flow.
//!
//! The crate is organised around the objects the estimator needs:
//!
//! * [`statespace`]: binary states, datasets and the text file formats.
//! * [`models`]: energy functions (Ising, marginalised RBM, ICA, tabular, quadratic).
//! * [`flowcore`]: connectivity schemes and the probability-flow objectives.
//! * [`hopfield`]: Hopfield networks, their flow objective and classical training rules.
//! * [`baselines`]: exact maximum likelihood, pseudolikelihood, contrastive divergence
//!   and the score-matching objective.
//! * [`samplers`]: exact categorical sampling, Gibbs sweeps and Hamiltonian Monte Carlo.
//! * [`optimize`]: L-BFGS and the annealed SGD loop.
//! * [`oracle`]: brute-force ground truth on enumerable systems.
//! * [`verify`]: the self-check suites run by `mpf verify` and the acceptance tests.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod error;
pub mod flowcore;
pub mod hopfield;
pub mod models;
pub mod optimize;
pub mod oracle;
mod par;
pub mod rng;
pub mod samplers;
pub mod statespace;
pub mod verify;

pub use error::{MpfError, Result};
pub use flowcore::{ConnectivityScheme, FlowObjective, MpfOptions, PmpfConfig};
pub use hopfield::HopfieldNet;
pub use models::{
    ContinuousEnergy, EnergyModel, IcaModel, IsingModel, ModelParams, QuadraticEnergy, RbmModel,
    TabularModel,
};
pub use optimize::{LbfgsResult, LbfgsStatus, OptimizerConfig};
pub use samplers::HmcConfig;
pub use statespace::{BinaryState, Dataset, TabularDistribution};

/// Largest dimension for which tabular (2^d-sized) operations are allowed.
pub const ENUMERATION_CAP: usize = 20;

/// Energy differences are clamped to this magnitude before exponentiation.
pub const EXP_CLAMP: f64 = 500.0;
