//! Per-subspace codebooks in centroid-major and dimension-major layouts.
//!
//! Centroid `l` of a codebook occupies `rowmajor[l * sub_dim..(l + 1) * sub_dim]`.
//! The transposed copy holds coordinate `t` of every centroid contiguously in
//! `transposed[t * k..(t + 1) * k]`, which is what the blocked kernel streams.
//! Rows are unpadded; kernels handle `k % w` themselves.

use alloc::vec::Vec;

use crate::error::{check_finite, Error, Result};
use crate::params::MAX_K;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    subspace: usize,
    k: usize,
    sub_dim: usize,
    rowmajor: Vec<f32>,
    transposed: Vec<f32>,
    biases: Vec<f32>,
}

impl Codebook {
    /// Builds a codebook from flat centroid-major data, deriving the
    /// transposed layout and the bias terms.
    pub fn new(subspace: usize, sub_dim: usize, rowmajor: Vec<f32>) -> Result<Self> {
        let k = check_shape(sub_dim, rowmajor.len())?;
        check_finite(&rowmajor)?;
        let biases = biases_flat(&rowmajor, sub_dim);
        Ok(Self::assemble(subspace, k, sub_dim, rowmajor, biases))
    }

    /// Builds a codebook from one slice per centroid.
    pub fn from_rows<R: AsRef<[f32]>>(subspace: usize, rows: &[R]) -> Result<Self> {
        let sub_dim = rows.first().map_or(0, |r| r.as_ref().len());
        let flat = flatten_rows(rows, sub_dim)?;
        Self::new(subspace, sub_dim, flat)
    }

    /// Builds a codebook with caller-supplied bias terms, stored verbatim.
    /// Used when loading persisted codebooks.
    pub fn with_biases(
        subspace: usize,
        sub_dim: usize,
        rowmajor: Vec<f32>,
        biases: Vec<f32>,
    ) -> Result<Self> {
        let k = check_shape(sub_dim, rowmajor.len())?;
        if biases.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: biases.len(),
            });
        }
        check_finite(&rowmajor)?;
        check_finite(&biases)?;
        Ok(Self::assemble(subspace, k, sub_dim, rowmajor, biases))
    }

    fn assemble(
        subspace: usize,
        k: usize,
        sub_dim: usize,
        rowmajor: Vec<f32>,
        biases: Vec<f32>,
    ) -> Self {
        let transposed = transpose_flat(&rowmajor, k, sub_dim);
        Codebook {
            subspace,
            k,
            sub_dim,
            rowmajor,
            transposed,
            biases,
        }
    }

    pub fn subspace(&self) -> usize {
        self.subspace
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sub_dim(&self) -> usize {
        self.sub_dim
    }

    pub fn centroid(&self, index: usize) -> &[f32] {
        &self.rowmajor[index * self.sub_dim..(index + 1) * self.sub_dim]
    }

    pub fn centroids(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.rowmajor.chunks_exact(self.sub_dim)
    }

    pub fn rowmajor(&self) -> &[f32] {
        &self.rowmajor
    }

    pub fn transposed(&self) -> &[f32] {
        &self.transposed
    }

    /// Coordinate `t` of all `k` centroids.
    pub fn transposed_row(&self, t: usize) -> &[f32] {
        &self.transposed[t * self.k..(t + 1) * self.k]
    }

    pub fn biases(&self) -> &[f32] {
        &self.biases
    }

    /// Size of both layouts plus biases.
    pub fn resident_bytes(&self) -> usize {
        (self.rowmajor.len() + self.transposed.len() + self.biases.len()) * core::mem::size_of::<f32>()
    }
}

fn check_shape(sub_dim: usize, len: usize) -> Result<usize> {
    if sub_dim == 0 {
        return Err(Error::Config("sub_dim must be positive"));
    }
    if len % sub_dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: (len / sub_dim + 1) * sub_dim,
            got: len,
        });
    }
    let k = len / sub_dim;
    if k == 0 || k > MAX_K {
        return Err(Error::Config("k must be in [1, 65536]"));
    }
    Ok(k)
}

fn flatten_rows<R: AsRef<[f32]>>(rows: &[R], width: usize) -> Result<Vec<f32>> {
    let mut flat = Vec::with_capacity(rows.len() * width);
    for (row, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != width {
            return Err(Error::Ragged {
                row,
                len: r.len(),
                expected: width,
            });
        }
        flat.extend_from_slice(r);
    }
    Ok(flat)
}

/// Transposes a `k x sub_dim` matrix into `sub_dim x k`.
pub fn transpose_codebook<R: AsRef<[f32]>>(rows: &[R]) -> Result<Vec<Vec<f32>>> {
    let width = rows.first().map_or(0, |r| r.as_ref().len());
    let flat = flatten_rows(rows, width)?;
    let t = transpose_flat(&flat, rows.len(), width);
    Ok(t.chunks_exact(rows.len().max(1)).map(|c| c.to_vec()).collect())
}

pub(crate) fn transpose_flat(rowmajor: &[f32], k: usize, sub_dim: usize) -> Vec<f32> {
    let mut out = alloc::vec![0.0f32; k * sub_dim];
    for (l, centroid) in rowmajor.chunks_exact(sub_dim).enumerate() {
        for (t, &x) in centroid.iter().enumerate() {
            out[t * k + l] = x;
        }
    }
    out
}

/// `½‖c‖²` accumulated in double precision and rounded once.
#[inline]
pub fn bias_of(centroid: &[f32]) -> f32 {
    let mut sq = 0.0f64;
    for &x in centroid {
        let x = x as f64;
        sq += x * x;
    }
    (0.5 * sq) as f32
}

/// Bias terms `½‖c_l‖²` for each row.
pub fn compute_biases<R: AsRef<[f32]>>(rows: &[R]) -> Result<Vec<f32>> {
    let width = rows.first().map_or(0, |r| r.as_ref().len());
    let flat = flatten_rows(rows, width)?;
    check_finite(&flat)?;
    if width == 0 {
        return Ok(alloc::vec![0.0; rows.len()]);
    }
    Ok(biases_flat(&flat, width))
}

fn biases_flat(rowmajor: &[f32], sub_dim: usize) -> Vec<f32> {
    rowmajor.chunks_exact(sub_dim).map(bias_of).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn transposes_small_matrices() {
        let t = transpose_codebook(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(t, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        let t = transpose_codebook(&[vec![7.0, 8.0, 9.0]]).unwrap();
        assert_eq!(t, vec![vec![7.0], vec![8.0], vec![9.0]]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = transpose_codebook(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert_eq!(err, Error::Ragged { row: 1, len: 1, expected: 2 });
        assert!(Codebook::from_rows(0, &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn bias_examples() {
        let b = compute_biases(&[vec![3.0, 4.0], vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(b, vec![12.5, 0.0, 1.0]);
        let b = compute_biases(&[vec![0.0f32; 3]]).unwrap();
        assert_eq!(b, vec![0.0]);
        let b = compute_biases(&[vec![1.0f32; 4]]).unwrap();
        assert_eq!(b, vec![2.0]);
    }

    #[test]
    fn non_finite_bias_input_is_data_error() {
        let err = compute_biases(&[vec![1.0, f32::NAN]]).unwrap_err();
        assert_eq!(err, Error::NonFinite { index: 1 });
        assert_eq!(err.kind(), crate::ErrorKind::Data);
        assert!(Codebook::new(0, 2, vec![1.0, f32::INFINITY]).is_err());
    }

    #[test]
    fn codebook_layouts_agree() {
        let cb = Codebook::from_rows(3, &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(cb.k(), 2);
        assert_eq!(cb.sub_dim(), 3);
        assert_eq!(cb.subspace(), 3);
        assert_eq!(cb.transposed_row(0), &[1.0, 4.0]);
        assert_eq!(cb.transposed_row(2), &[3.0, 6.0]);
        assert_eq!(cb.centroid(1), &[4.0, 5.0, 6.0]);
        assert_eq!(cb.resident_bytes(), (6 + 6 + 2) * 4);
    }

    #[test]
    fn with_biases_keeps_supplied_values() {
        let cb = Codebook::with_biases(0, 1, vec![1.0, 2.0], vec![9.0, -1.0]).unwrap();
        assert_eq!(cb.biases(), &[9.0, -1.0]);
        assert!(Codebook::with_biases(0, 1, vec![1.0, 2.0], vec![9.0]).is_err());
    }

    fn matrix() -> impl Strategy<Value = (usize, usize, Vec<f32>)> {
        (1usize..=256, 1usize..=16).prop_flat_map(|(k, sub)| {
            (Just(k), Just(sub), proptest::collection::vec(-100.0f32..100.0, k * sub))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn layouts_are_dual((k, sub, data) in matrix()) {
            let cb = Codebook::new(0, sub, data.clone()).unwrap();
            for l in 0..k {
                for t in 0..sub {
                    prop_assert_eq!(cb.transposed()[t * k + l].to_bits(), data[l * sub + t].to_bits());
                }
            }
            let rows: Vec<&[f32]> = data.chunks_exact(sub).collect();
            let back = transpose_codebook(&transpose_codebook(&rows).unwrap()).unwrap();
            prop_assert_eq!(back.concat(), data);
        }

        #[test]
        fn biases_match_double_precision((_k, sub, data) in matrix()) {
            let cb = Codebook::new(0, sub, data.clone()).unwrap();
            for (l, row) in data.chunks_exact(sub).enumerate() {
                let exact: f64 = 0.5 * row.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>();
                let got = cb.biases()[l] as f64;
                prop_assert!(got >= 0.0);
                prop_assert!((got - exact).abs() <= 1e-6 * exact.max(f64::MIN_POSITIVE));
            }
        }
    }
}
