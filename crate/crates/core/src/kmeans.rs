//! Lloyd k-means for per-subspace codebooks.
//!
//! Seeding is k-means++ driven by a ChaCha8 stream selected by the subspace
//! index, so each subspace's codebook depends only on its own data and the
//! configured seed. Assignment uses the direct squared distance; centroid
//! means are accumulated in `f64` in point order.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codebook::{transpose_flat, Codebook};
use crate::dataset::VectorDataset;
use crate::error::{check_finite, Error, Result};
use crate::params::{PqParams, MAX_K};

pub const DEFAULT_MAX_ITERS: usize = 25;
pub const DEFAULT_TOL: f64 = 1e-4;
/// Default training sample per subspace, as a multiple of `k`.
pub const DEFAULT_SAMPLE_FACTOR: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once the relative objective improvement drops to this value.
    pub tol: f64,
    pub seed: u64,
    /// Maximum training points per subspace; `None` uses every point.
    pub sample_cap: Option<usize>,
}

impl TrainConfig {
    pub fn new(k: usize) -> Self {
        TrainConfig {
            k,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            seed: 0,
            sample_cap: Some(DEFAULT_SAMPLE_FACTOR * k),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn sample_cap(mut self, cap: Option<usize>) -> Self {
        self.sample_cap = cap;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_K {
            return Err(Error::Config("k must be in [1, 65536]"));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive"));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::Config("tol must be a non-negative number"));
        }
        if self.sample_cap == Some(0) {
            return Err(Error::Config("sample_cap must be positive"));
        }
        Ok(())
    }
}

/// A trained codebook with its training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedCodebook {
    pub codebook: Codebook,
    /// Objective (sum of squared distances to the assigned centroid) at
    /// every assignment pass.
    pub objectives: Vec<f64>,
    /// Points per centroid in the final assignment.
    pub cluster_sizes: Vec<usize>,
    /// Number of points actually used for training.
    pub training_points: usize,
}

impl TrainedCodebook {
    pub fn final_objective(&self) -> f64 {
        self.objectives.last().copied().unwrap_or(0.0)
    }
}

/// Trains the codebook for `subspace` from `points`, an `n x sub_dim`
/// row-major buffer.
pub fn train_codebook(points: &[f32], sub_dim: usize, subspace: usize, cfg: &TrainConfig) -> Result<TrainedCodebook> {
    cfg.validate()?;
    if sub_dim == 0 || points.len() % sub_dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: sub_dim,
            got: points.len() % sub_dim.max(1),
        });
    }
    check_finite(points)?;
    let n = points.len() / sub_dim;
    let k = cfg.k;
    if n < k {
        return Err(Error::TooFewPoints { n, k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(subspace as u64);

    let sample: Vec<f32>;
    let points = match cfg.sample_cap {
        Some(cap) if cap < n => {
            let mut idx = rand::seq::index::sample(&mut rng, n, cap.max(k)).into_vec();
            idx.sort_unstable();
            sample = idx
                .iter()
                .flat_map(|&i| points[i * sub_dim..(i + 1) * sub_dim].iter().copied())
                .collect();
            &sample[..]
        }
        _ => points,
    };
    let n = points.len() / sub_dim;

    let distinct = count_distinct(points, sub_dim, k);
    if distinct < k {
        return Err(Error::Degenerate { distinct, k });
    }

    let mut centroids = seed_plus_plus(points, sub_dim, k, &mut rng);
    let mut assignment = vec![0u32; n];
    let mut residual = vec![0.0f32; n];
    let mut counts = vec![0usize; k];
    let mut objectives = Vec::new();
    let mut updates = 0;
    let hard_cap = 2 * cfg.max_iters + 1;

    loop {
        let objective = assign(points, sub_dim, &centroids, k, &mut assignment, &mut residual);
        objectives.push(objective);
        counts.fill(0);
        for &a in &assignment {
            counts[a as usize] += 1;
        }
        let repaired = repair_empty(points, sub_dim, &mut centroids, &mut assignment, &mut residual, &mut counts);

        let converged = match objectives.len() {
            0 | 1 => false,
            len => {
                let prev = objectives[len - 2];
                prev - objective <= cfg.tol * prev
            }
        };
        if (repaired == 0 && (converged || updates >= cfg.max_iters)) || updates >= hard_cap {
            break;
        }
        update_means(points, sub_dim, &mut centroids, &assignment, &counts);
        updates += 1;
    }

    let codebook = Codebook::new(subspace, sub_dim, centroids).map_err(|e| e.in_subspace(subspace))?;
    Ok(TrainedCodebook {
        codebook,
        objectives,
        cluster_sizes: counts,
        training_points: n,
    })
}

/// Trains codebook `j` of `params` from the `j`-th subvectors of `dataset`.
pub fn train_subspace(dataset: &VectorDataset, params: &PqParams, cfg: &TrainConfig, j: usize) -> Result<TrainedCodebook> {
    check_train_inputs(dataset, params, cfg)?;
    if j >= params.m() {
        return Err(Error::Config("subspace index out of range"));
    }
    let points = dataset.subspace(j, params.sub_dim());
    train_codebook(&points, params.sub_dim(), j, cfg).map_err(|e| match e {
        e @ Error::Subspace { .. } => e,
        e => e.in_subspace(j),
    })
}

/// Trains all `m` codebooks in subspace order.
pub fn train_all_codebooks(dataset: &VectorDataset, params: &PqParams, cfg: &TrainConfig) -> Result<Vec<TrainedCodebook>> {
    (0..params.m()).map(|j| train_subspace(dataset, params, cfg, j)).collect()
}

fn check_train_inputs(dataset: &VectorDataset, params: &PqParams, cfg: &TrainConfig) -> Result<()> {
    if dataset.d() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            got: dataset.d(),
        });
    }
    if cfg.k != params.k() {
        return Err(Error::Config("training k differs from quantizer k"));
    }
    Ok(())
}

/// Number of distinct rows, counting no further than `limit`.
fn count_distinct(points: &[f32], sub_dim: usize, limit: usize) -> usize {
    let n = points.len() / sub_dim;
    let row = |i: usize| &points[i * sub_dim..(i + 1) * sub_dim];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| {
        row(a)
            .iter()
            .zip(row(b))
            .map(|(x, y)| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut distinct = usize::from(n > 0);
    for pair in order.windows(2) {
        if row(pair[0]) != row(pair[1]) {
            distinct += 1;
            if distinct >= limit {
                break;
            }
        }
    }
    distinct
}

#[inline]
fn sq_dist(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

fn seed_plus_plus(points: &[f32], sub_dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let n = points.len() / sub_dim;
    let row = |i: usize| &points[i * sub_dim..(i + 1) * sub_dim];
    let mut centroids = Vec::with_capacity(k * sub_dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(row(first));
    let mut nearest: Vec<f32> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();

    for _ in 1..k {
        let total: f64 = nearest.iter().map(|&d| d as f64).sum();
        let target = rng.random::<f64>() * total;
        let mut cum = 0.0f64;
        let mut pick = None;
        let mut last_positive = 0;
        for (i, &d) in nearest.iter().enumerate() {
            if d > 0.0 {
                cum += d as f64;
                last_positive = i;
                if cum > target {
                    pick = Some(i);
                    break;
                }
            }
        }
        let pick = pick.unwrap_or(last_positive);
        let c = row(pick);
        centroids.extend_from_slice(c);
        for (i, best) in nearest.iter_mut().enumerate() {
            let d = sq_dist(row(i), c);
            if d < *best {
                *best = d;
            }
        }
    }
    centroids
}

const ASSIGN_LANES: usize = 16;

/// Nearest centroid for every point (ties to the lower index); returns the
/// objective accumulated in point order.
fn assign(
    points: &[f32],
    sub_dim: usize,
    centroids: &[f32],
    k: usize,
    assignment: &mut [u32],
    residual: &mut [f32],
) -> f64 {
    let ct = transpose_flat(centroids, k, sub_dim);
    let full = k - k % ASSIGN_LANES;
    let mut objective = 0.0f64;
    for (i, p) in points.chunks_exact(sub_dim).enumerate() {
        let mut best = f32::INFINITY;
        let mut best_idx = 0usize;
        let mut base = 0;
        while base < full {
            let mut acc = [0.0f32; ASSIGN_LANES];
            for (t, &x) in p.iter().enumerate() {
                let off = t * k + base;
                let row: &[f32; ASSIGN_LANES] = ct[off..off + ASSIGN_LANES].try_into().unwrap();
                for lane in 0..ASSIGN_LANES {
                    let d = x - row[lane];
                    acc[lane] += d * d;
                }
            }
            for (lane, &d) in acc.iter().enumerate() {
                if d < best {
                    best = d;
                    best_idx = base + lane;
                }
            }
            base += ASSIGN_LANES;
        }
        for l in full..k {
            let mut d = 0.0f32;
            for (t, &x) in p.iter().enumerate() {
                let diff = x - ct[t * k + l];
                d += diff * diff;
            }
            if d < best {
                best = d;
                best_idx = l;
            }
        }
        assignment[i] = best_idx as u32;
        residual[i] = best;
        objective += best as f64;
    }
    objective
}

/// Moves every empty centroid onto the point with the largest residual
/// (taken from a cluster that keeps at least one member). Returns the
/// number of centroids moved.
fn repair_empty(
    points: &[f32],
    sub_dim: usize,
    centroids: &mut [f32],
    assignment: &mut [u32],
    residual: &mut [f32],
    counts: &mut [usize],
) -> usize {
    let mut repaired = 0;
    for e in 0..counts.len() {
        if counts[e] != 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for (i, &r) in residual.iter().enumerate() {
            if counts[assignment[i] as usize] < 2 {
                continue;
            }
            if pick.is_none_or(|p| r > residual[p]) {
                pick = Some(i);
            }
        }
        // n >= k guarantees a cluster with two members while one is empty.
        let Some(p) = pick else { break };
        counts[assignment[p] as usize] -= 1;
        assignment[p] = e as u32;
        counts[e] = 1;
        residual[p] = 0.0;
        centroids[e * sub_dim..(e + 1) * sub_dim].copy_from_slice(&points[p * sub_dim..(p + 1) * sub_dim]);
        repaired += 1;
    }
    repaired
}

fn update_means(points: &[f32], sub_dim: usize, centroids: &mut [f32], assignment: &[u32], counts: &[usize]) {
    let mut sums = vec![0.0f64; centroids.len()];
    for (p, &a) in points.chunks_exact(sub_dim).zip(assignment) {
        let s = &mut sums[a as usize * sub_dim..(a as usize + 1) * sub_dim];
        for (acc, &x) in s.iter_mut().zip(p) {
            *acc += x as f64;
        }
    }
    for (l, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let inv = count as f64;
        for t in 0..sub_dim {
            centroids[l * sub_dim + t] = (sums[l * sub_dim + t] / inv) as f32;
        }
    }
}
