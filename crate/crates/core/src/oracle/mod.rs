//! Brute-force ground truth for enumerable systems.
//!
//! Everything here is exponential in the state dimension and exists to check
//! the fast paths: partition functions, exact likelihoods and moments, the dense
//! flow matrix and its spectrum, probability-flow evolution, the KL-rate
//! identity, the spectral log-probability bound, the small-ε hypercube limit and
//! finite-difference derivatives.

mod bound;
mod enumerate;
mod fd;
mod flow;
mod kl;
mod smlimit;

pub use bound::{spectral_bound, BoundEntry, SpectralBoundReport};
pub use enumerate::{
    energy_table, exact_conditional, exact_loglik, exact_nll_and_grad, log_partition,
    model_distribution, pairwise_moments, partition_function,
};
pub use fd::{fd_gradient, fd_hessian, hessian_min_eig, rel_error};
pub use flow::{build_flow_matrix, FlowMatrix, SpectralDecomposition, FLOW_CAP};
pub use kl::{kl_flow_check, KlFlowReport};
pub use smlimit::{gauss_legendre, sm_limit_check, SmLimitReport, SmLimitRow, SM_RESCALE};
