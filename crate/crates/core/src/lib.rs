//! Product-quantization construction kernels.
//!
//! The crate covers the pure, allocation-light part of PQ encoding:
//!
//! * [`params`] and [`codebook`]: quantizer shape, per-subspace codebooks in
//!   centroid-major and dimension-major layouts, bias terms `½‖c‖²`.
//! * [`kmeans`]: seeded Lloyd training of one codebook per subspace.
//! * [`kernels`]: the reference, reformulated and centroid-blocked encoders.
//! * [`bulk`]: chunk-major and vector-major encoding of whole datasets.
//! * [`eval`]: reconstruction error and flat ADC recall.
//!
//! Centroid indices are 0-based throughout.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, threading
//! and the command line live in the `cspq` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bulk;
pub mod codebook;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod kmeans;
pub mod params;

pub use bulk::{encode_all, encode_blocks, estimate_working_set, ExecutionOrder, ExecutionPlan, WorkingSet};
pub use codebook::{bias_of, compute_biases, transpose_codebook, Codebook};
pub use dataset::{PqCodes, VectorDataset};
pub use error::{Error, ErrorKind, Result};
pub use eval::{adc_search, evaluate, evaluate_codes, exact_top_n, reconstruct, reconstruction_mse, AdcTable, EvalReport};
pub use kernels::{
    encode_blocked, encode_blocked_with, encode_ref, encode_reform, encode_vector, encode_vector_into,
    expanded_distance, reformulated_score, BiasSource, EncoderVariant, ScoreBlock,
};
pub use kmeans::{train_all_codebooks, train_codebook, train_subspace, TrainConfig, TrainedCodebook};
pub use params::{native_lane_width, partition_vector, PqParams, DEFAULT_BLOCK_SIZE, DEFAULT_K, DEFAULT_SUB_DIM, MAX_K};
