//! Multi-worker drivers for bulk encoding and codebook training.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use cspq_core::{
    encode_blocks, train_subspace, Codebook, ExecutionPlan, PqCodes, PqParams, TrainConfig, TrainedCodebook,
    VectorDataset,
};

use crate::error::Result;

/// Environment variable supplying the default worker count.
pub const THREADS_ENV: &str = "CSPQ_THREADS";

pub fn default_workers() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&n| n > 0)
        .or_else(|| thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
}

/// Encodes `dataset` according to `plan`.
///
/// Whole blocks of `plan.block_size` vectors are handed to workers; each
/// worker writes a disjoint range of the output, so codes do not depend on
/// the worker count or scheduling.
pub fn encode_dataset(dataset: &VectorDataset, codebooks: &[Codebook], plan: &ExecutionPlan) -> Result<PqCodes> {
    plan.validate()?;
    let (m, k) = match codebooks.first() {
        Some(cb) => (codebooks.len(), cb.k()),
        None => return Err(cspq_core::Error::Config("at least one codebook is required").into()),
    };
    if m * codebooks[0].sub_dim() != dataset.d() {
        return Err(cspq_core::Error::DimensionMismatch {
            expected: m * codebooks[0].sub_dim(),
            got: dataset.d(),
        }
        .into());
    }
    let mut codes = PqCodes::zeroed(dataset.n(), m, k);
    let data = dataset.as_slice();
    let d = dataset.d();
    let blocks = dataset.n().div_ceil(plan.block_size);
    let workers = plan.workers.min(blocks);

    if workers <= 1 {
        encode_blocks(data, codebooks, plan, codes.as_mut_slice())?;
        return Ok(codes);
    }

    let work = Mutex::new(
        data.chunks(plan.block_size * d)
            .zip(codes.as_mut_slice().chunks_mut(plan.block_size * m)),
    );
    let failure = Mutex::new(None);
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let next = work.lock().unwrap().next();
                let Some((input, out)) = next else { break };
                if let Err(e) = encode_blocks(input, codebooks, plan, out) {
                    failure.lock().unwrap().get_or_insert(e);
                    break;
                }
            });
        }
    });
    match failure.into_inner().unwrap() {
        Some(e) => Err(e.into()),
        None => Ok(codes),
    }
}

/// Trains all codebooks, spreading subspaces over `workers` threads.
/// Results match [`cspq_core::train_all_codebooks`] exactly.
pub fn train_codebooks(
    dataset: &VectorDataset,
    params: &PqParams,
    cfg: &TrainConfig,
    workers: usize,
) -> Result<Vec<TrainedCodebook>> {
    let m = params.m();
    let workers = workers.clamp(1, m);
    if workers == 1 {
        return Ok(cspq_core::train_all_codebooks(dataset, params, cfg)?);
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<cspq_core::Result<TrainedCodebook>>>> = (0..m).map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                if j >= m {
                    break;
                }
                *slots[j].lock().unwrap() = Some(train_subspace(dataset, params, cfg, j));
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| Ok(slot.into_inner().unwrap().expect("every subspace trained")?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synth_dataset;
    use cspq_core::{encode_vector, EncoderVariant, ExecutionOrder};

    fn trained(n: usize, d: usize, m: usize, k: usize) -> (VectorDataset, Vec<Codebook>) {
        let ds = synth_dataset(n, d, 8, 11).unwrap();
        let params = PqParams::new(d, m, k).unwrap();
        let cbs = train_codebooks(&ds, &params, &TrainConfig::new(k).seed(1), 1)
            .unwrap()
            .into_iter()
            .map(|t| t.codebook)
            .collect();
        (ds, cbs)
    }

    #[test]
    fn three_vectors_match_per_vector_loop() {
        let (ds, cbs) = trained(3, 4, 2, 2);
        for order in [ExecutionOrder::ChunkMajor, ExecutionOrder::VectorMajor] {
            let plan = ExecutionPlan { order, workers: 2, block_size: 1, ..Default::default() };
            let codes = encode_dataset(&ds, &cbs, &plan).unwrap();
            for (i, v) in ds.rows().enumerate() {
                assert_eq!(codes.row(i), &encode_vector(v, &cbs, EncoderVariant::Blocked, plan.w).unwrap()[..]);
            }
        }
    }

    #[test]
    fn plan_invariance() {
        let (ds, cbs) = trained(10_000, 16, 4, 16);
        let base = encode_dataset(&ds, &cbs, &ExecutionPlan { block_size: 1, ..Default::default() }).unwrap();
        for block_size in [1, 1000] {
            for workers in [1, 8] {
                let plan = ExecutionPlan { block_size, workers, ..Default::default() };
                assert_eq!(encode_dataset(&ds, &cbs, &plan).unwrap(), base);
            }
        }
    }

    #[test]
    fn empty_dataset_encodes_to_empty_codes() {
        let (_, cbs) = trained(100, 4, 2, 2);
        let empty = VectorDataset::new(4, vec![], "empty").unwrap();
        let codes = encode_dataset(&empty, &cbs, &ExecutionPlan { workers: 4, ..Default::default() }).unwrap();
        assert_eq!(codes.n(), 0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (_, cbs) = trained(100, 4, 2, 2);
        let wrong = VectorDataset::new(6, vec![0.0; 12], "w").unwrap();
        assert!(encode_dataset(&wrong, &cbs, &ExecutionPlan::default()).is_err());
    }

    #[test]
    fn parallel_training_matches_sequential() {
        let ds = synth_dataset(2000, 8, 4, 2).unwrap();
        let params = PqParams::new(8, 4, 8).unwrap();
        let cfg = TrainConfig::new(8).seed(3);
        let seq = cspq_core::train_all_codebooks(&ds, &params, &cfg).unwrap();
        assert_eq!(train_codebooks(&ds, &params, &cfg, 3).unwrap(), seq);
    }
}
