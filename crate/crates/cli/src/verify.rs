//! Three-way encoder equivalence check on sampled vectors.
//!
//! Every sampled subvector is encoded by the reference, reformulated and
//! blocked encoders. When an optimized encoder disagrees with the
//! reference, the two chosen centroids are compared by their exact
//! (double-precision) distances to the subvector. A gap within
//! `tolerance * max(1, D)` is a near-tie that float rounding may flip in
//! either direction; anything larger is a failure.

use cspq_core::{encode_blocked, encode_ref, encode_reform, Codebook, EncoderVariant, VectorDataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

pub const DEFAULT_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MismatchClass {
    NearTie,
    Failure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub vector: usize,
    pub chunk: usize,
    pub variant: EncoderVariant,
    pub reference: usize,
    pub got: usize,
    pub gap: f64,
    pub class: MismatchClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub vectors: usize,
    pub subvectors: usize,
    pub tolerance: f64,
    pub w: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn near_ties(&self) -> usize {
        self.count(MismatchClass::NearTie)
    }

    pub fn failures(&self) -> usize {
        self.count(MismatchClass::Failure)
    }

    fn count(&self, class: MismatchClass) -> usize {
        self.mismatches.iter().filter(|m| m.class == class).count()
    }
}

fn exact_distance(v: &[f32], c: &[f32]) -> f64 {
    v.iter().zip(c).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum()
}

/// Classifies a disagreement between centroids `a` and `b` for `v`.
pub fn classify(v: &[f32], cb: &Codebook, a: usize, b: usize, tolerance: f64) -> (f64, MismatchClass) {
    let da = exact_distance(v, cb.centroid(a));
    let db = exact_distance(v, cb.centroid(b));
    let gap = (da - db).abs();
    let class = if gap <= tolerance * da.max(db).max(1.0) {
        MismatchClass::NearTie
    } else {
        MismatchClass::Failure
    };
    (gap, class)
}

/// Checks `samples` vectors (all of them when `samples >= n`), chosen
/// without replacement by `seed`.
pub fn verify_equivalence(
    dataset: &VectorDataset,
    codebooks: &[Codebook],
    samples: usize,
    tolerance: f64,
    w: usize,
    seed: u64,
) -> Result<VerifyReport> {
    let n = dataset.n();
    let picked: Vec<usize> = if samples >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, n, samples).into_vec();
        idx.sort_unstable();
        idx
    };
    // Validates shapes once, with chunk context on errors.
    if let Some(&i) = picked.first() {
        cspq_core::encode_vector(dataset.row(i), codebooks, EncoderVariant::Blocked, w)?;
    }
    let sub_dim = codebooks.first().map_or(1, Codebook::sub_dim);

    let mut mismatches = Vec::new();
    for &i in &picked {
        for (j, (sub, cb)) in dataset.row(i).chunks_exact(sub_dim).zip(codebooks).enumerate() {
            let reference = encode_ref(sub, cb)?;
            let candidates = [
                (EncoderVariant::Reformulated, encode_reform(sub, cb)?),
                (EncoderVariant::Blocked, encode_blocked(sub, cb, w)?),
            ];
            for (variant, got) in candidates {
                if got != reference {
                    let (gap, class) = classify(sub, cb, reference, got, tolerance);
                    mismatches.push(Mismatch {
                        vector: i,
                        chunk: j,
                        variant,
                        reference,
                        got,
                        gap,
                        class,
                    });
                }
            }
        }
    }
    Ok(VerifyReport {
        vectors: picked.len(),
        subvectors: picked.len() * codebooks.len(),
        tolerance,
        w,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::train_codebooks;
    use crate::synth::synth_dataset;
    use cspq_core::{PqParams, TrainConfig};

    #[test]
    fn trained_codebooks_have_no_failures() {
        let ds = synth_dataset(4000, 32, 8, 5).unwrap();
        let params = PqParams::new(32, 2, 64).unwrap();
        let cbs: Vec<Codebook> = train_codebooks(&ds, &params, &TrainConfig::new(64).seed(2), 1)
            .unwrap()
            .into_iter()
            .map(|t| t.codebook)
            .collect();
        let report = verify_equivalence(&ds, &cbs, 1000, DEFAULT_TOLERANCE, 8, 1).unwrap();
        assert_eq!(report.vectors, 1000);
        assert_eq!(report.subvectors, 2000);
        assert_eq!(report.failures(), 0);
    }

    #[test]
    fn exact_tie_is_a_near_tie() {
        let cb = Codebook::from_rows(0, &[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let (gap, class) = classify(&[1.0, 2.0], &cb, 0, 1, DEFAULT_TOLERANCE);
        assert_eq!(gap, 0.0);
        assert_eq!(class, MismatchClass::NearTie);
    }

    #[test]
    fn corrupted_biases_are_failures() {
        let rows = [vec![0.0, 0.0], vec![10.0, 10.0]];
        let good = Codebook::from_rows(0, &rows).unwrap();
        let bad = Codebook::with_biases(0, 2, rows.concat(), vec![1000.0, 0.0]).unwrap();
        let ds = VectorDataset::new(2, vec![0.1, -0.1, 0.2, 0.0, 9.0, 9.5], "t").unwrap();
        assert_eq!(verify_equivalence(&ds, &[good], 10, DEFAULT_TOLERANCE, 4, 0).unwrap().failures(), 0);
        let report = verify_equivalence(&ds, &[bad], 10, DEFAULT_TOLERANCE, 4, 0).unwrap();
        // the two vectors near the origin are pushed to centroid 1 by both optimized encoders
        assert_eq!(report.failures(), 4);
        assert!(report.mismatches.iter().all(|m| m.reference == 0 && m.got == 1));
    }
}
