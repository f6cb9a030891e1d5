//! Quantization quality: reconstruction error and flat ADC recall.

use alloc::vec::Vec;

use crate::bulk::{encode_all, ExecutionPlan};
use crate::codebook::Codebook;
use crate::dataset::{PqCodes, VectorDataset};
use crate::error::{Error, Result};
use crate::kernels::{check_codebooks, EncoderVariant};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mse: f64,
    pub recall_at_n: f64,
    pub top_n: usize,
    pub n_queries: usize,
    pub n_db: usize,
    pub variant: Option<EncoderVariant>,
}

fn check_codes(codes: &[u16], codebooks: &[Codebook]) -> Result<()> {
    if codes.len() != codebooks.len() {
        return Err(Error::DimensionMismatch {
            expected: codebooks.len(),
            got: codes.len(),
        });
    }
    for (chunk, (&c, cb)) in codes.iter().zip(codebooks).enumerate() {
        if c as usize >= cb.k() {
            return Err(Error::CodeOutOfRange {
                chunk,
                code: c as usize,
                k: cb.k(),
            });
        }
    }
    Ok(())
}

/// Concatenation of the centroids selected by `codes`.
pub fn reconstruct(codes: &[u16], codebooks: &[Codebook]) -> Result<Vec<f32>> {
    check_codes(codes, codebooks)?;
    let mut out = Vec::with_capacity(codebooks.iter().map(Codebook::sub_dim).sum());
    for (&c, cb) in codes.iter().zip(codebooks) {
        out.extend_from_slice(cb.centroid(c as usize));
    }
    Ok(out)
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

/// Per-chunk query-to-centroid squared distances, `m x k`.
#[derive(Debug, Clone)]
pub struct AdcTable {
    k: usize,
    table: Vec<f32>,
}

impl AdcTable {
    pub fn new(query: &[f32], codebooks: &[Codebook]) -> Result<Self> {
        let (m, sub_dim, k) = check_codebooks(codebooks, query.len())?;
        let mut table = Vec::with_capacity(m * k);
        for (q, cb) in query.chunks_exact(sub_dim).zip(codebooks) {
            table.extend(cb.centroids().map(|c| sq_dist(q, c)));
        }
        Ok(AdcTable { k, table })
    }

    /// Table lookups summed in chunk order. `codes` must be in range.
    #[inline]
    pub fn distance(&self, codes: &[u16]) -> f32 {
        let mut acc = 0.0f32;
        for (j, &c) in codes.iter().enumerate() {
            acc += self.table[j * self.k + c as usize];
        }
        acc
    }
}

/// The `top_n` smallest `(index, score)` pairs, ties to the lower index.
fn smallest(mut scored: Vec<(f32, usize)>, top_n: usize) -> Vec<(usize, f32)> {
    let cmp = |a: &(f32, usize), b: &(f32, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let top_n = top_n.min(scored.len());
    if top_n == 0 {
        return Vec::new();
    }
    if top_n < scored.len() {
        scored.select_nth_unstable_by(top_n - 1, cmp);
        scored.truncate(top_n);
    }
    scored.sort_unstable_by(cmp);
    scored.into_iter().map(|(s, i)| (i, s)).collect()
}

/// Flat asymmetric-distance search over encoded vectors. `top_n` is
/// clamped to the database size.
pub fn adc_search(query: &[f32], codes: &PqCodes, codebooks: &[Codebook], top_n: usize) -> Result<Vec<(usize, f32)>> {
    let table = AdcTable::new(query, codebooks)?;
    if codes.m() != codebooks.len() || codes.k() > codebooks[0].k() {
        return Err(Error::Config("codes do not match codebooks"));
    }
    let scored = codes.rows().enumerate().map(|(i, row)| (table.distance(row), i)).collect();
    Ok(smallest(scored, top_n))
}

/// Exact top-`top_n` neighbours by squared distance, accumulated in `f64`.
pub fn exact_top_n(query: &[f32], db: &VectorDataset, top_n: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = db
        .rows()
        .enumerate()
        .map(|(i, v)| {
            let d: f64 = v.iter().zip(query).map(|(&a, &b)| (a as f64 - b as f64) * (a as f64 - b as f64)).sum();
            (d, i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let top_n = top_n.min(scored.len());
    if top_n == 0 {
        return Vec::new();
    }
    if top_n < scored.len() {
        scored.select_nth_unstable_by(top_n - 1, cmp);
        scored.truncate(top_n);
    }
    scored.sort_unstable_by(cmp);
    scored.into_iter().map(|(_, i)| i).collect()
}

/// Mean over vectors of `‖v − reconstruct(code(v))‖²`.
pub fn reconstruction_mse(db: &VectorDataset, codes: &PqCodes, codebooks: &[Codebook]) -> Result<f64> {
    let (_, sub_dim, _) = check_codebooks(codebooks, db.d())?;
    if codes.n() != db.n() {
        return Err(Error::DimensionMismatch {
            expected: db.n(),
            got: codes.n(),
        });
    }
    if db.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0f64;
    for (v, row) in db.rows().zip(codes.rows()) {
        check_codes(row, codebooks)?;
        for ((sub, &c), cb) in v.chunks_exact(sub_dim).zip(row).zip(codebooks) {
            let centroid = cb.centroid(c as usize);
            total += sub
                .iter()
                .zip(centroid)
                .map(|(&a, &b)| (a as f64 - b as f64) * (a as f64 - b as f64))
                .sum::<f64>();
        }
    }
    Ok(total / db.n() as f64)
}

/// Quality report for already-encoded vectors. Ground truth, when given,
/// supplies one neighbour list per query; otherwise it is computed exactly.
pub fn evaluate_codes(
    db: &VectorDataset,
    queries: &VectorDataset,
    codebooks: &[Codebook],
    codes: &PqCodes,
    top_n: usize,
    ground_truth: Option<&[Vec<usize>]>,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::EmptyQueries);
    }
    if top_n == 0 {
        return Err(Error::Config("top_n must be positive"));
    }
    if queries.d() != db.d() {
        return Err(Error::DimensionMismatch {
            expected: db.d(),
            got: queries.d(),
        });
    }
    if let Some(gt) = ground_truth {
        if gt.len() < queries.n() {
            return Err(Error::DimensionMismatch {
                expected: queries.n(),
                got: gt.len(),
            });
        }
    }
    let mse = reconstruction_mse(db, codes, codebooks)?;

    let mut hits = 0usize;
    let mut possible = 0usize;
    for (qi, q) in queries.rows().enumerate() {
        let approx = adc_search(q, codes, codebooks, top_n)?;
        let truth = match ground_truth {
            Some(gt) => gt[qi].iter().copied().take(top_n).collect(),
            None => exact_top_n(q, db, top_n),
        };
        possible += truth.len();
        hits += truth.iter().filter(|t| approx.iter().any(|(i, _)| i == *t)).count();
    }
    let recall_at_n = if possible == 0 { 0.0 } else { hits as f64 / possible as f64 };
    Ok(EvalReport {
        mse,
        recall_at_n,
        top_n,
        n_queries: queries.n(),
        n_db: db.n(),
        variant: None,
    })
}

/// Encodes `db` with `variant` and evaluates the resulting codes.
pub fn evaluate(
    db: &VectorDataset,
    queries: &VectorDataset,
    codebooks: &[Codebook],
    variant: EncoderVariant,
    w: usize,
    top_n: usize,
) -> Result<EvalReport> {
    let plan = ExecutionPlan {
        variant,
        w,
        ..ExecutionPlan::default()
    };
    let codes = encode_all(db.as_slice(), codebooks, &plan)?;
    let mut report = evaluate_codes(db, queries, codebooks, &codes, top_n, None)?;
    report.variant = Some(variant);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{encode_ref, encode_vector};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_pair(j: usize) -> Codebook {
        Codebook::from_rows(j, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn random_codebooks(rng: &mut ChaCha8Rng, m: usize, k: usize, sub_dim: usize) -> Vec<Codebook> {
        (0..m)
            .map(|j| Codebook::new(j, sub_dim, (0..k * sub_dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()).unwrap())
            .collect()
    }

    #[test]
    fn reconstruct_examples() {
        let cbs = [unit_pair(0), unit_pair(1)];
        assert_eq!(reconstruct(&[0, 1], &cbs).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            reconstruct(&[0, 2], &cbs).unwrap_err(),
            Error::CodeOutOfRange { chunk: 1, code: 2, k: 2 }
        );
        let v = [0.0, 1.0, 1.0, 0.0];
        let codes = encode_vector(&v, &cbs, EncoderVariant::Blocked, 4).unwrap();
        assert_eq!(reconstruct(&codes, &cbs).unwrap(), v);
    }

    #[test]
    fn reconstruction_is_chunkwise_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cbs = random_codebooks(&mut rng, 2, 16, 3);
        for _ in 0..200 {
            let v: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let codes = encode_vector(&v, &cbs, EncoderVariant::Reference, 4).unwrap();
            let r = reconstruct(&codes, &cbs).unwrap();
            let err = |r: &[f32]| v.iter().zip(r).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>();
            let best = err(&r);
            for c0 in 0..16u16 {
                let mut alt = codes.clone();
                alt[0] = c0;
                assert!(best <= err(&reconstruct(&alt, &cbs).unwrap()) + 1e-6);
            }
        }
    }

    #[test]
    fn adc_exact_match_ranks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cbs = random_codebooks(&mut rng, 2, 8, 2);
        let mut codes = Vec::new();
        for i in 0..20u16 {
            codes.extend([i % 8, (i * 3) % 8]);
        }
        let codes = PqCodes::new(2, 8, codes).unwrap();
        let q = reconstruct(codes.row(5), &cbs).unwrap();
        let hits = adc_search(&q, &codes, &cbs, 3).unwrap();
        assert_eq!(hits[0], (5, 0.0));
    }

    #[test]
    fn adc_ties_prefer_lower_index_and_clamp() {
        let cbs = [Codebook::from_rows(0, &[vec![1.0, 1.0]]).unwrap()];
        let codes = PqCodes::new(1, 1, vec![0; 5]).unwrap();
        let hits = adc_search(&[0.0, 0.0], &codes, &cbs, 3).unwrap();
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(adc_search(&[0.0, 0.0], &codes, &cbs, 50).unwrap().len(), 5);
    }

    #[test]
    fn adc_table_sum_equals_reconstruction_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cbs = random_codebooks(&mut rng, 4, 16, 4);
        for _ in 0..100 {
            let v: Vec<f32> = (0..16).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            let codes = encode_vector(&v, &cbs, EncoderVariant::Blocked, 4).unwrap();
            let recon = reconstruct(&codes, &cbs).unwrap();
            let table = AdcTable::new(&v, &cbs).unwrap();
            let mut expect = 0.0f32;
            for (a, b) in v.chunks_exact(4).zip(recon.chunks_exact(4)) {
                expect += sq_dist(a, b);
            }
            assert_eq!(table.distance(&codes).to_bits(), expect.to_bits());
        }
    }

    #[test]
    fn exact_top_n_breaks_ties_by_index() {
        let db = VectorDataset::new(1, vec![1.0, -1.0, 1.0, 0.0], "t").unwrap();
        assert_eq!(exact_top_n(&[0.0], &db, 3), vec![3, 0, 1]);
    }

    #[test]
    fn evaluate_rejects_empty_queries() {
        let cbs = [unit_pair(0)];
        let db = VectorDataset::new(2, vec![1.0, 0.0], "t").unwrap();
        let q = VectorDataset::new(2, vec![], "t").unwrap();
        assert_eq!(evaluate(&db, &q, &cbs, EncoderVariant::Blocked, 4, 1).unwrap_err(), Error::EmptyQueries);
    }

    #[test]
    fn variants_give_identical_reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cbs = random_codebooks(&mut rng, 4, 32, 4);
        let db = VectorDataset::new(16, (0..500 * 16).map(|_| rng.random_range(-1.0f32..1.0)).collect(), "t").unwrap();
        let q = VectorDataset::new(16, (0..20 * 16).map(|_| rng.random_range(-1.0f32..1.0)).collect(), "t").unwrap();
        let reports: Vec<EvalReport> = EncoderVariant::ALL
            .iter()
            .map(|&v| evaluate(&db, &q, &cbs, v, 8, 10).unwrap())
            .collect();
        for r in &reports[1..] {
            assert_eq!(r.mse.to_bits(), reports[0].mse.to_bits());
            assert_eq!(r.recall_at_n.to_bits(), reports[0].recall_at_n.to_bits());
        }
        assert!((0.0..=1.0).contains(&reports[0].recall_at_n));
        assert!(reports[0].mse >= 0.0);
    }

    #[test]
    fn ground_truth_is_used_when_given() {
        let cbs = [unit_pair(0)];
        let db = VectorDataset::new(2, vec![1.0, 0.0, 0.0, 1.0], "t").unwrap();
        let q = VectorDataset::new(2, vec![1.0, 0.0], "t").unwrap();
        let codes = PqCodes::new(1, 2, vec![0, 1]).unwrap();
        let good = evaluate_codes(&db, &q, &cbs, &codes, 1, Some(&[vec![0]])).unwrap();
        assert_eq!(good.recall_at_n, 1.0);
        let bad = evaluate_codes(&db, &q, &cbs, &codes, 1, Some(&[vec![1]])).unwrap();
        assert_eq!(bad.recall_at_n, 0.0);
        assert_eq!(encode_ref(&[1.0, 0.0], &cbs[0]).unwrap(), 0);
    }
}
