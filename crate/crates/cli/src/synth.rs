//! Seeded Gaussian-mixture datasets.
//!
//! Cluster means are uniform in `[-spread, spread]^d`; vector `i` belongs to
//! cluster `i % clusters` and gets isotropic normal noise of standard
//! deviation `noise` per coordinate.

use cspq_core::VectorDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const DEFAULT_SPREAD: f32 = 1.0;
pub const DEFAULT_NOISE: f32 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub clusters: usize,
    pub seed: u64,
    pub spread: f32,
    pub noise: f32,
}

impl SynthConfig {
    pub fn new(n: usize, d: usize, clusters: usize, seed: u64) -> Self {
        SynthConfig {
            n,
            d,
            clusters,
            seed,
            spread: DEFAULT_SPREAD,
            noise: DEFAULT_NOISE,
        }
    }

    pub fn noise(mut self, noise: f32) -> Self {
        self.noise = noise;
        self
    }
}

/// Database and query sets drawn from the same mixture; the queries are the
/// last `n_queries` draws.
pub fn synth_split(cfg: &SynthConfig, n_queries: usize) -> Result<(VectorDataset, VectorDataset)> {
    if cfg.n == 0 || cfg.d == 0 || cfg.clusters == 0 {
        return Err(Error::Usage("n, d and clusters must be positive".into()));
    }
    if !(cfg.spread.is_finite() && cfg.noise.is_finite() && cfg.spread >= 0.0 && cfg.noise >= 0.0) {
        return Err(Error::Usage("spread and noise must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let means: Vec<f32> = (0..cfg.clusters * cfg.d)
        .map(|_| rng.random_range(-cfg.spread..=cfg.spread))
        .collect();
    let total = cfg.n + n_queries;
    let mut data = Vec::with_capacity(total * cfg.d);
    for i in 0..total {
        let c = i % cfg.clusters;
        for &mu in &means[c * cfg.d..(c + 1) * cfg.d] {
            let z: f32 = rng.sample(StandardNormal);
            data.push(mu + cfg.noise * z);
        }
    }
    let queries = data.split_off(cfg.n * cfg.d);
    let label = format!("synth(n={}, d={}, clusters={}, seed={})", cfg.n, cfg.d, cfg.clusters, cfg.seed);
    Ok((
        VectorDataset::new(cfg.d, data, label.clone())?,
        VectorDataset::new(cfg.d, queries, format!("{label} queries"))?,
    ))
}

pub fn synth_with(cfg: &SynthConfig) -> Result<VectorDataset> {
    Ok(synth_split(cfg, 0)?.0)
}

pub fn synth_dataset(n: usize, d: usize, clusters: usize, seed: u64) -> Result<VectorDataset> {
    synth_with(&SynthConfig::new(n, d, clusters, seed))
}
