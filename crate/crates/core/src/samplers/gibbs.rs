use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::models::{sigmoid, EnergyModel, RbmModel};
use crate::rng::MpfRng;
use crate::statespace::BinaryState;

/// `p(x_n = 1 | rest) = σ(-(E(x_n=1) - E(x_n=0)))`.
pub fn conditional_one<M: EnergyModel + ?Sized>(model: &M, x: &[u8], n: usize) -> f64 {
    let flip = model.flip_delta(x, n);
    let up = if x[n] == 0 { flip } else { -flip };
    sigmoid(-up)
}

/// One ascending sweep of single-site Gibbs updates.
pub fn gibbs_sweep<M: EnergyModel + ?Sized>(model: &M, x: &mut [u8], rng: &mut MpfRng) {
    for n in 0..x.len() {
        let p = conditional_one(model, x, n);
        x[n] = u8::from(rng.random::<f64>() < p);
    }
}

/// Burn-in and thinning, in sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            burn_in: 100,
            thin: 10,
        }
    }
}

/// One chain from a uniform random start, keeping every `thin`-th state after burn-in.
pub fn gibbs_chain<M: EnergyModel + ?Sized>(
    model: &M,
    count: usize,
    cfg: &GibbsConfig,
    rng: &mut MpfRng,
) -> Vec<BinaryState> {
    let mut x: Vec<u8> = (0..model.dim()).map(|_| rng.random_range(0..2)).collect();
    for _ in 0..cfg.burn_in {
        gibbs_sweep(model, &mut x, rng);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..cfg.thin.max(1) {
            gibbs_sweep(model, &mut x, rng);
        }
        out.push(BinaryState::from_bits_unchecked(x.clone()));
    }
    out
}

/// Block update `h ~ p(h|v)` then `v ~ p(v|h)` under the joint energy `hᵀWv`.
pub fn rbm_gibbs_step(model: &RbmModel, v: &mut [u8], rng: &mut MpfRng) {
    let h: Vec<u8> = model
        .hidden_probs(v)
        .iter()
        .map(|&p| u8::from(rng.random::<f64>() < p))
        .collect();
    for (vk, p) in v.iter_mut().zip(model.visible_probs(&h)) {
        *vk = u8::from(rng.random::<f64>() < p);
    }
}
