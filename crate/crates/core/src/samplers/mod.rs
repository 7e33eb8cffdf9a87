//! Exact categorical sampling, Gibbs sampling and Hamiltonian Monte Carlo.

mod exact;
mod gibbs;
mod hmc;

pub use exact::{exact_sample, laplace, sample_ica, sample_model, SampleMode};
pub use gibbs::{conditional_one, gibbs_chain, gibbs_sweep, rbm_gibbs_step, GibbsConfig};
pub use hmc::{hmc_sample, leapfrog, HmcConfig, HmcOutcome};
