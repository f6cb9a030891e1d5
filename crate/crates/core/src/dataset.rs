use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{check_finite, Error, Result};

/// Dense row-major batch of `n` vectors of dimensionality `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    d: usize,
    data: Vec<f32>,
    source: String,
}

impl VectorDataset {
    pub fn new(d: usize, data: Vec<f32>, source: impl Into<String>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimensionality must be positive"));
        }
        if data.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: (data.len() / d + 1) * d,
                got: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(VectorDataset {
            d,
            data,
            source: source.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.d)
    }

    /// Copies subspace `j` of every vector into a contiguous `n x sub_dim` buffer.
    pub fn subspace(&self, j: usize, sub_dim: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.n() * sub_dim);
        for row in self.rows() {
            out.extend_from_slice(&row[j * sub_dim..(j + 1) * sub_dim]);
        }
        out
    }
}

/// Encoded dataset: `n` rows of `m` centroid indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PqCodes {
    m: usize,
    k: usize,
    codes: Vec<u16>,
}

impl PqCodes {
    pub fn new(m: usize, k: usize, codes: Vec<u16>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("m must be positive"));
        }
        if k == 0 || k > crate::params::MAX_K {
            return Err(Error::Config("k must be in [1, 65536]"));
        }
        if codes.len() % m != 0 {
            return Err(Error::DimensionMismatch {
                expected: (codes.len() / m + 1) * m,
                got: codes.len(),
            });
        }
        if let Some(pos) = codes.iter().position(|&c| c as usize >= k) {
            return Err(Error::CodeOutOfRange {
                chunk: pos % m,
                code: codes[pos] as usize,
                k,
            });
        }
        Ok(PqCodes { m, k, codes })
    }

    /// All-zero codes for `n` vectors; filled in by the encoders.
    pub fn zeroed(n: usize, m: usize, k: usize) -> Self {
        PqCodes {
            m,
            k,
            codes: alloc::vec![0; n * m],
        }
    }

    pub fn n(&self) -> usize {
        self.codes.len() / self.m
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[u16] {
        &self.codes[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, u16> {
        self.codes.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.codes
    }

    pub fn as_mut_slice(&mut self) -> &mut [u16] {
        &mut self.codes
    }
}
