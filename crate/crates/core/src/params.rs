//! Quantizer configuration and vector partitioning.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Centroids per subspace when codes are one byte each.
pub const DEFAULT_K: usize = 256;
/// Subvector dimensionality used by the default configuration.
pub const DEFAULT_SUB_DIM: usize = 16;
/// Vectors per execution block.
pub const DEFAULT_BLOCK_SIZE: usize = 4096;
/// Largest supported codebook; codes are stored as `u16`.
pub const MAX_K: usize = 1 << 16;

/// Number of `f32` lanes in the widest vector register the crate was
/// compiled for. Used as the default centroid-block width.
pub const fn native_lane_width() -> usize {
    if cfg!(target_feature = "avx512f") {
        16
    } else if cfg!(target_feature = "avx") {
        8
    } else {
        4
    }
}

/// Shape of a product quantizer: `d = m * sub_dim`, `k` centroids per
/// subspace, centroid-block width `w` and execution block size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PqParams {
    d: usize,
    m: usize,
    sub_dim: usize,
    k: usize,
    w: usize,
    block_size: usize,
}

impl PqParams {
    pub fn new(d: usize, m: usize, k: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("d must be positive"));
        }
        if m == 0 {
            return Err(Error::Config("m must be positive"));
        }
        if d % m != 0 {
            return Err(Error::Indivisible { d, m });
        }
        if k == 0 || k > MAX_K {
            return Err(Error::Config("k must be in [1, 65536]"));
        }
        Ok(PqParams {
            d,
            m,
            sub_dim: d / m,
            k,
            w: native_lane_width(),
            block_size: DEFAULT_BLOCK_SIZE,
        })
    }

    pub fn with_lane_width(mut self, w: usize) -> Result<Self> {
        if w == 0 {
            return Err(Error::Config("lane width must be at least 1"));
        }
        self.w = w;
        Ok(self)
    }

    pub fn with_block_size(mut self, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::Config("block size must be at least 1"));
        }
        self.block_size = block_size;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sub_dim(&self) -> usize {
        self.sub_dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }
}

/// Splits `v` into its `m` contiguous subvectors.
pub fn partition_vector<'a>(v: &'a [f32], params: &PqParams) -> Result<Vec<&'a [f32]>> {
    if v.len() != params.d {
        return Err(Error::DimensionMismatch {
            expected: params.d,
            got: v.len(),
        });
    }
    Ok(v.chunks_exact(params.sub_dim).collect())
}
