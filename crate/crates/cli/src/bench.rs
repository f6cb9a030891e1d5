//! Timing harness for encoder configurations.
//!
//! The ablation matrix enables one optimization per row:
//!
//! | row | encoder                          | order        |
//! |-----|----------------------------------|--------------|
//! | 1   | reference (full expansion)       | vector_major |
//! | 2   | blocked, biases recomputed       | vector_major |
//! | 3   | blocked, biases recomputed       | chunk_major  |
//! | 4   | blocked, precomputed biases      | chunk_major  |
//!
//! Each configuration gets one untimed warm-up run followed by `reps` timed
//! runs; the median is reported.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use cspq_core::{BiasSource, Codebook, EncoderVariant, ExecutionOrder, ExecutionPlan, PqCodes, VectorDataset};

use crate::error::{Error, Result};
use crate::exec::encode_dataset;

pub const CSV_HEADER: [&str; 11] = [
    "variant",
    "order",
    "w",
    "block_size",
    "n",
    "d",
    "m",
    "k",
    "wall_seconds",
    "vps",
    "speedup",
];

pub const DEFAULT_REPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matrix {
    /// The four-row ablation.
    Ablation,
    /// Blocked chunk-major encoder over several lane widths.
    Lanes,
    /// Blocked chunk-major encoder over several block sizes.
    Blocks,
}

impl FromStr for Matrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ablation" => Ok(Matrix::Ablation),
            "lanes" => Ok(Matrix::Lanes),
            "blocks" => Ok(Matrix::Blocks),
            other => Err(Error::Usage(format!("unknown matrix {other:?} (ablation, lanes, blocks)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub reps: usize,
    pub w: usize,
    pub block_size: usize,
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let plan = ExecutionPlan::default();
        BenchConfig {
            reps: DEFAULT_REPS,
            w: plan.w,
            block_size: plan.block_size,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub variant: String,
    pub order: ExecutionOrder,
    pub w: usize,
    pub block_size: usize,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k: usize,
    pub wall_seconds: f64,
    pub vectors_per_second: f64,
    pub speedup_vs_baseline: f64,
}

/// Label used in the `variant` column.
pub fn variant_label(plan: &ExecutionPlan) -> String {
    match (plan.variant, plan.bias) {
        (EncoderVariant::Blocked, BiasSource::PerVector) => "blocked-recomputed-bias".into(),
        (v, _) => v.name().into(),
    }
}

/// Plans for the rows of `matrix`, first row being the baseline.
pub fn matrix_plans(matrix: Matrix, cfg: &BenchConfig) -> Vec<ExecutionPlan> {
    let base = ExecutionPlan {
        order: ExecutionOrder::ChunkMajor,
        block_size: cfg.block_size,
        variant: EncoderVariant::Blocked,
        w: cfg.w,
        workers: cfg.workers,
        bias: BiasSource::Precomputed,
    };
    match matrix {
        Matrix::Ablation => vec![
            ExecutionPlan {
                variant: EncoderVariant::Reference,
                order: ExecutionOrder::VectorMajor,
                ..base
            },
            ExecutionPlan {
                order: ExecutionOrder::VectorMajor,
                bias: BiasSource::PerVector,
                ..base
            },
            ExecutionPlan {
                bias: BiasSource::PerVector,
                ..base
            },
            base,
        ],
        Matrix::Lanes => [1, 2, 4, 8, 16, 32].into_iter().map(|w| ExecutionPlan { w, ..base }).collect(),
        Matrix::Blocks => [1, 64, 256, 1024, 4096, 16384]
            .into_iter()
            .map(|block_size| ExecutionPlan { block_size, ..base })
            .collect(),
    }
}

/// Median wall time of `reps` runs after one warm-up, plus the codes from
/// the last run.
pub fn time_plan(
    dataset: &VectorDataset,
    codebooks: &[Codebook],
    plan: &ExecutionPlan,
    reps: usize,
) -> Result<(f64, PqCodes)> {
    let mut codes = encode_dataset(dataset, codebooks, plan)?;
    let mut times = Vec::with_capacity(reps.max(1));
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        codes = encode_dataset(dataset, codebooks, plan)?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok((median(&mut times).max(f64::MIN_POSITIVE), codes))
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Times every plan. Repetitions are interleaved across plans (one round
/// runs each plan once) so slow periods on a shared host do not all land on
/// a single row.
pub fn run_plans(
    dataset: &VectorDataset,
    codebooks: &[Codebook],
    plans: &[ExecutionPlan],
    reps: usize,
) -> Result<Vec<BenchResult>> {
    let m = codebooks.len();
    let k = codebooks.first().map_or(0, Codebook::k);
    for plan in plans {
        encode_dataset(dataset, codebooks, plan)?;
    }
    let mut times = vec![Vec::with_capacity(reps.max(1)); plans.len()];
    for _ in 0..reps.max(1) {
        for (plan, t) in plans.iter().zip(&mut times) {
            let start = Instant::now();
            encode_dataset(dataset, codebooks, plan)?;
            t.push(start.elapsed().as_secs_f64());
        }
    }
    let secs: Vec<f64> = times.iter_mut().map(|t| median(t).max(f64::MIN_POSITIVE)).collect();
    let baseline = secs.first().copied().unwrap_or(1.0);
    Ok(plans
        .iter()
        .zip(secs)
        .map(|(plan, secs)| BenchResult {
            variant: variant_label(plan),
            order: plan.order,
            w: plan.w,
            block_size: plan.block_size,
            n: dataset.n(),
            d: dataset.d(),
            m,
            k,
            wall_seconds: secs,
            vectors_per_second: dataset.n() as f64 / secs,
            speedup_vs_baseline: baseline / secs,
        })
        .collect())
}

pub fn run_matrix(
    dataset: &VectorDataset,
    codebooks: &[Codebook],
    matrix: Matrix,
    cfg: &BenchConfig,
) -> Result<Vec<BenchResult>> {
    run_plans(dataset, codebooks, &matrix_plans(matrix, cfg), cfg.reps)
}

pub fn write_csv<W: Write>(results: &[BenchResult], out: W) -> Result<()> {
    let to_err = |e: csv::Error| Error::Usage(format!("writing CSV: {e}"));
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(CSV_HEADER).map_err(to_err)?;
    for r in results {
        wtr.write_record([
            r.variant.clone(),
            r.order.name().to_string(),
            r.w.to_string(),
            r.block_size.to_string(),
            r.n.to_string(),
            r.d.to_string(),
            r.m.to_string(),
            r.k.to_string(),
            format!("{:.6}", r.wall_seconds),
            format!("{:.1}", r.vectors_per_second),
            format!("{:.3}", r.speedup_vs_baseline),
        ])
        .map_err(to_err)?;
    }
    wtr.flush().map_err(|e| Error::Usage(format!("writing CSV: {e}")))?;
    Ok(())
}

pub fn format_table(results: &[BenchResult]) -> String {
    let mut s = format!(
        "{:<24} {:<13} {:>3} {:>6} {:>11} {:>13} {:>8}\n",
        "variant", "order", "w", "block", "seconds", "vectors/s", "speedup"
    );
    for r in results {
        s.push_str(&format!(
            "{:<24} {:<13} {:>3} {:>6} {:>11.4} {:>13.0} {:>7.2}x\n",
            r.variant,
            r.order.name(),
            r.w,
            r.block_size,
            r.wall_seconds,
            r.vectors_per_second,
            r.speedup_vs_baseline
        ));
    }
    s
}
