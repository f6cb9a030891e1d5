//! File formats, multi-worker drivers, equivalence checking and benchmarks
//! built on [`cspq_core`].

pub mod bench;
pub mod error;
pub mod exec;
pub mod io;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
pub use exec::{default_workers, encode_dataset, train_codebooks, THREADS_ENV};
pub use synth::{synth_dataset, synth_split, SynthConfig};
pub use verify::{verify_equivalence, VerifyReport};
