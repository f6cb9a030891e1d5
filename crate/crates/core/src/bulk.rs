//! Dataset-scale encoding order.
//!
//! `ChunkMajor` walks the input in blocks of `block_size` vectors and, within
//! a block, finishes every subvector of chunk `j` before moving to chunk
//! `j + 1`, so one codebook is reused across the whole block. `VectorMajor`
//! encodes each vector completely before the next. Both read the row-major
//! input in place and write codes straight into the output; no distance
//! buffers are allocated.

use core::fmt;
use core::str::FromStr;

use crate::codebook::Codebook;
use crate::dataset::PqCodes;
use crate::error::{Error, Result};
use crate::kernels::{check_codebooks, select_kernel, BiasSource, EncoderVariant};
use crate::params::{native_lane_width, PqParams, DEFAULT_BLOCK_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecutionOrder {
    ChunkMajor,
    VectorMajor,
}

impl ExecutionOrder {
    pub fn name(self) -> &'static str {
        match self {
            ExecutionOrder::ChunkMajor => "chunk_major",
            ExecutionOrder::VectorMajor => "vector_major",
        }
    }
}

impl fmt::Display for ExecutionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExecutionOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chunk_major" | "chunk-major" => Ok(ExecutionOrder::ChunkMajor),
            "vector_major" | "vector-major" => Ok(ExecutionOrder::VectorMajor),
            _ => Err(Error::Config("unknown execution order")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub order: ExecutionOrder,
    pub block_size: usize,
    pub variant: EncoderVariant,
    pub w: usize,
    pub workers: usize,
    pub bias: BiasSource,
}

impl Default for ExecutionPlan {
    fn default() -> Self {
        ExecutionPlan {
            order: ExecutionOrder::ChunkMajor,
            block_size: DEFAULT_BLOCK_SIZE,
            variant: EncoderVariant::Blocked,
            w: native_lane_width(),
            workers: 1,
            bias: BiasSource::Precomputed,
        }
    }
}

impl ExecutionPlan {
    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::Config("block size must be at least 1"));
        }
        if self.w == 0 {
            return Err(Error::Config("lane width must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1"));
        }
        Ok(())
    }
}

/// Encodes the row-major vectors in `data` into `out` (`m` codes per
/// vector) on the calling thread, following `plan.order` and
/// `plan.block_size`. `plan.workers` is ignored here.
pub fn encode_blocks(data: &[f32], codebooks: &[Codebook], plan: &ExecutionPlan, out: &mut [u16]) -> Result<()> {
    plan.validate()?;
    let d = codebooks.iter().map(Codebook::sub_dim).sum::<usize>();
    let (m, sub_dim, _) = check_codebooks(codebooks, d)?;
    if data.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            expected: (data.len() / d + 1) * d,
            got: data.len(),
        });
    }
    let n = data.len() / d;
    if out.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            got: out.len(),
        });
    }

    let kernel = select_kernel(plan.variant, plan.w, plan.bias);
    let w = plan.w;
    match plan.order {
        ExecutionOrder::ChunkMajor => {
            for (block, codes) in data.chunks(plan.block_size * d).zip(out.chunks_mut(plan.block_size * m)) {
                for (j, cb) in codebooks.iter().enumerate() {
                    let offset = j * sub_dim;
                    for (v, row) in block.chunks_exact(d).zip(codes.chunks_exact_mut(m)) {
                        let sub = &v[offset..offset + sub_dim];
                        row[j] = kernel(sub, cb, w) as u16;
                    }
                }
            }
        }
        ExecutionOrder::VectorMajor => {
            for (v, row) in data.chunks_exact(d).zip(out.chunks_exact_mut(m)) {
                for ((sub, cb), code) in v.chunks_exact(sub_dim).zip(codebooks).zip(row.iter_mut()) {
                    *code = kernel(sub, cb, w) as u16;
                }
            }
        }
    }
    Ok(())
}

/// Single-threaded [`encode_blocks`] producing fresh [`PqCodes`].
pub fn encode_all(data: &[f32], codebooks: &[Codebook], plan: &ExecutionPlan) -> Result<PqCodes> {
    let d = codebooks.iter().map(Codebook::sub_dim).sum::<usize>();
    let (m, _, k) = check_codebooks(codebooks, d)?;
    let mut codes = PqCodes::zeroed(data.len() / d, m, k);
    encode_blocks(data, codebooks, plan, codes.as_mut_slice())?;
    Ok(codes)
}

/// Resident bytes while encoding: one codebook in both layouts with its
/// biases, plus per-worker kernel state. Does not depend on the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkingSet {
    pub codebook_bytes: usize,
    pub transient_bytes_per_worker: usize,
    pub workers: usize,
}

impl WorkingSet {
    pub fn total(&self) -> usize {
        self.codebook_bytes + self.workers * self.transient_bytes_per_worker
    }
}

pub fn estimate_working_set(params: &PqParams, plan: &ExecutionPlan) -> WorkingSet {
    let f = core::mem::size_of::<f32>();
    let (k, sub_dim) = (params.k(), params.sub_dim());
    WorkingSet {
        codebook_bytes: k * sub_dim * f * 2 + k * f,
        // w accumulators, w scores, best score and best index
        transient_bytes_per_worker: (2 * plan.w + 2) * f,
        workers: plan.workers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::encode_vector;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, m: usize, sub_dim: usize, k: usize, seed: u64) -> (Vec<f32>, Vec<Codebook>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * m * sub_dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let cbs = (0..m)
            .map(|j| {
                let c = (0..k * sub_dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
                Codebook::new(j, sub_dim, c).unwrap()
            })
            .collect();
        (data, cbs)
    }

    #[test]
    fn matches_per_vector_oracle() {
        let (data, cbs) = setup(3, 2, 2, 4, 1);
        for variant in EncoderVariant::ALL {
            for order in [ExecutionOrder::ChunkMajor, ExecutionOrder::VectorMajor] {
                let plan = ExecutionPlan { variant, order, block_size: 2, ..Default::default() };
                let codes = encode_all(&data, &cbs, &plan).unwrap();
                for (i, v) in data.chunks_exact(4).enumerate() {
                    assert_eq!(codes.row(i), &encode_vector(v, &cbs, variant, plan.w).unwrap()[..]);
                }
            }
        }
    }

    #[test]
    fn block_size_and_order_do_not_change_codes() {
        let (data, cbs) = setup(2000, 4, 4, 32, 2);
        let base = encode_all(&data, &cbs, &ExecutionPlan { block_size: 1, ..Default::default() }).unwrap();
        for block_size in [7, 64, 1000, 4096] {
            for order in [ExecutionOrder::ChunkMajor, ExecutionOrder::VectorMajor] {
                let plan = ExecutionPlan { block_size, order, ..Default::default() };
                assert_eq!(encode_all(&data, &cbs, &plan).unwrap(), base);
            }
        }
    }

    #[test]
    fn empty_input_gives_empty_codes() {
        let (_, cbs) = setup(0, 2, 2, 4, 3);
        let codes = encode_all(&[], &cbs, &ExecutionPlan::default()).unwrap();
        assert_eq!(codes.n(), 0);
    }

    #[test]
    fn rejects_bad_shapes() {
        let (data, cbs) = setup(3, 2, 2, 4, 1);
        let mut out = [0u16; 6];
        assert!(encode_blocks(&data[..5], &cbs, &ExecutionPlan::default(), &mut out).is_err());
        assert!(encode_blocks(&data, &cbs, &ExecutionPlan::default(), &mut out[..5]).is_err());
        let bad = ExecutionPlan { block_size: 0, ..Default::default() };
        assert!(encode_blocks(&data, &cbs, &bad, &mut out).is_err());
        assert!(encode_blocks(&data, &[], &ExecutionPlan::default(), &mut out).is_err());
    }

    #[test]
    fn working_set_examples() {
        let plan = ExecutionPlan { w: 8, workers: 1, ..Default::default() };
        let p = PqParams::new(256, 16, 256).unwrap();
        let ws = estimate_working_set(&p, &plan);
        assert_eq!(ws.codebook_bytes, 33_792);
        assert_eq!(ws.transient_bytes_per_worker, (2 * 8 + 2) * 4);

        let p = PqParams::new(16, 4, 16).unwrap();
        assert_eq!(estimate_working_set(&p, &plan).codebook_bytes, 576);

        // The estimate has no dataset-size input at all; d and m may change
        // freely as long as sub_dim and k stay fixed.
        let p2 = PqParams::new(32, 8, 16).unwrap();
        assert_eq!(estimate_working_set(&p2, &plan), estimate_working_set(&p, &plan));
    }
}
