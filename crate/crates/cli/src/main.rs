use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cspq::bench::{self, BenchConfig, Matrix};
use cspq::error::{Error, Result};
use cspq::io;
use cspq::synth::{synth_split, SynthConfig, DEFAULT_NOISE};
use cspq::verify::{verify_equivalence, MismatchClass, DEFAULT_TOLERANCE};
use cspq::{encode_dataset, train_codebooks};
use cspq_core::{
    native_lane_width, BiasSource, Codebook, EncoderVariant, ExecutionOrder, ExecutionPlan, PqParams, TrainConfig,
    VectorDataset,
    DEFAULT_BLOCK_SIZE,
};

#[derive(Parser)]
#[command(name = "cspq", version, about = "Product quantization encoder toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Workers {
    /// Worker threads (default: CSPQ_THREADS, else available cores)
    #[arg(long, env = "CSPQ_THREADS")]
    workers: Option<usize>,
}

impl Workers {
    fn get(&self) -> usize {
        self.workers.filter(|&n| n > 0).unwrap_or_else(cspq::default_workers)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train per-subspace codebooks with k-means
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_codebooks: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 256)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        iters: usize,
        /// Training points per subspace (default 256*k; 0 uses every point)
        #[arg(long)]
        sample_cap: Option<usize>,
        #[command(flatten)]
        workers: Workers,
    },
    /// Encode vectors to PQ codes
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        codebooks: PathBuf,
        #[arg(long)]
        out_codes: PathBuf,
        #[arg(long, default_value = "blocked")]
        variant: EncoderVariant,
        #[arg(long, default_value = "chunk_major")]
        order: ExecutionOrder,
        #[arg(long, default_value_t = native_lane_width())]
        w: usize,
        #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
        block_size: usize,
        #[command(flatten)]
        workers: Workers,
    },
    /// Check that all encoders agree on sampled vectors
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        codebooks: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = native_lane_width())]
        w: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time encoder configurations
    Bench {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        codebooks: PathBuf,
        /// ablation, lanes or blocks
        #[arg(long, default_value = "ablation")]
        matrix: Matrix,
        #[arg(long, default_value_t = bench::DEFAULT_REPS)]
        reps: usize,
        #[arg(long, default_value_t = native_lane_width())]
        w: usize,
        #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
        block_size: usize,
        /// Write CSV here instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        workers: Workers,
    },
    /// Reconstruction error and ADC recall
    Eval {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        codebooks: PathBuf,
        #[arg(long)]
        codes: PathBuf,
        #[arg(long = "topN", alias = "top-n", default_value_t = 10)]
        top_n: usize,
        #[arg(long)]
        groundtruth: Option<PathBuf>,
    },
    /// Write a seeded Gaussian-mixture dataset
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 32)]
        clusters: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_NOISE)]
        noise: f32,
        #[arg(long)]
        out: PathBuf,
        /// Extra query vectors drawn from the same mixture
        #[arg(long, default_value_t = 0, requires = "queries_out")]
        queries: usize,
        #[arg(long)]
        queries_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read_codebooks_for(path: &PathBuf) -> Result<Vec<Codebook>> {
    let cbs = io::read_codebooks(path)?;
    if cbs.is_empty() {
        return Err(Error::format(0, "codebook file holds no subspaces"));
    }
    Ok(cbs)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train {
            input,
            out_codebooks,
            m,
            k,
            seed,
            iters,
            sample_cap,
            workers,
        } => {
            let ds = io::read_vectors(&input)?;
            let params = PqParams::new(ds.d(), m, k)?;
            let mut cfg = TrainConfig::new(k).seed(seed).max_iters(iters);
            if let Some(cap) = sample_cap {
                cfg = cfg.sample_cap(if cap == 0 { None } else { Some(cap) });
            }
            let trained = train_codebooks(&ds, &params, &cfg, workers.get())?;
            for t in &trained {
                println!(
                    "subspace {:>3}: objective {:.6e} after {} iterations on {} points",
                    t.codebook.subspace(),
                    t.final_objective(),
                    t.objectives.len(),
                    t.training_points
                );
            }
            let cbs: Vec<Codebook> = trained.into_iter().map(|t| t.codebook).collect();
            io::write_codebooks(&out_codebooks, &cbs)
        }
        Command::Encode {
            input,
            codebooks,
            out_codes,
            variant,
            order,
            w,
            block_size,
            workers,
        } => {
            let cbs = read_codebooks_for(&codebooks)?;
            let d = cbs.len() * cbs[0].sub_dim();
            // A zero-byte input has no dimension of its own; take it from the codebooks.
            let ds = match std::fs::metadata(&input) {
                Ok(meta) if meta.len() == 0 => VectorDataset::new(d, Vec::new(), input.display().to_string())?,
                _ => io::read_vectors(&input)?,
            };
            let plan = ExecutionPlan {
                order,
                block_size,
                variant,
                w,
                workers: workers.get(),
                bias: BiasSource::Precomputed,
            };
            let codes = encode_dataset(&ds, &cbs, &plan)?;
            io::write_codes(&out_codes, &codes)?;
            println!("encoded {} vectors into {} codes each", codes.n(), codes.m());
            Ok(())
        }
        Command::Verify {
            input,
            codebooks,
            samples,
            tolerance,
            w,
            seed,
        } => {
            let ds = io::read_vectors(&input)?;
            let cbs = read_codebooks_for(&codebooks)?;
            let report = verify_equivalence(&ds, &cbs, samples, tolerance, w, seed)?;
            for mm in report.mismatches.iter().take(20) {
                let class = match mm.class {
                    MismatchClass::NearTie => "near-tie",
                    MismatchClass::Failure => "FAILURE",
                };
                println!(
                    "vector {} chunk {} {}: reference {} got {} gap {:.3e} {}",
                    mm.vector, mm.chunk, mm.variant, mm.reference, mm.got, mm.gap, class
                );
            }
            println!(
                "checked {} vectors ({} subvectors), w={}, tolerance={:e}: {} near-ties, {} failures",
                report.vectors,
                report.subvectors,
                report.w,
                report.tolerance,
                report.near_ties(),
                report.failures()
            );
            match report.failures() {
                0 => Ok(()),
                n => Err(Error::Verification(n)),
            }
        }
        Command::Bench {
            input,
            codebooks,
            matrix,
            reps,
            w,
            block_size,
            csv,
            workers,
        } => {
            let ds = io::read_vectors(&input)?;
            let cbs = read_codebooks_for(&codebooks)?;
            let cfg = BenchConfig {
                reps,
                w,
                block_size,
                workers: workers.get(),
            };
            let results = bench::run_matrix(&ds, &cbs, matrix, &cfg)?;
            match csv {
                Some(path) => {
                    print!("{}", bench::format_table(&results));
                    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    bench::write_csv(&results, file)
                }
                None => {
                    eprint!("{}", bench::format_table(&results));
                    bench::write_csv(&results, std::io::stdout().lock())
                }
            }
        }
        Command::Eval {
            input,
            queries,
            codebooks,
            codes,
            top_n,
            groundtruth,
        } => {
            let db = io::read_vectors(&input)?;
            let qs = io::read_vectors(&queries)?;
            let cbs = read_codebooks_for(&codebooks)?;
            let codes = io::read_codes(&codes)?;
            if codes.n() != db.n() {
                return Err(cspq_core::Error::DimensionMismatch {
                    expected: db.n(),
                    got: codes.n(),
                }
                .into());
            }
            let gt = groundtruth.map(io::read_ivecs).transpose()?.map(|m| m.to_lists());
            let report = cspq_core::evaluate_codes(&db, &qs, &cbs, &codes, top_n, gt.as_deref())?;
            println!("database vectors: {}", report.n_db);
            println!("queries:          {}", report.n_queries);
            println!("mse:              {:.6e}", report.mse);
            println!("recall@{}:        {:.4}", report.top_n, report.recall_at_n);
            Ok(())
        }
        Command::Synth {
            n,
            d,
            clusters,
            seed,
            noise,
            out,
            queries,
            queries_out,
        } => {
            let cfg = SynthConfig::new(n, d, clusters, seed).noise(noise);
            let (db, qs) = synth_split(&cfg, queries)?;
            io::write_fvecs(&out, &db)?;
            if let Some(path) = queries_out {
                io::write_fvecs(&path, &qs)?;
            }
            Ok(())
        }
    }
}
