//! Nearest-centroid encoders.
//!
//! Three variants compute the same assignment:
//!
//! * [`encode_ref`] evaluates the full expanded distance
//!   `‖v‖² + ‖c‖² − 2⟨v, c⟩` for every centroid, including the `‖v‖²` term
//!   that cannot change the ranking. It is the baseline.
//! * [`encode_reform`] minimises the score `S = ½‖c‖² − ⟨v, c⟩` using the
//!   precomputed bias `½‖c‖²`. Since `‖v − c‖² = ‖v‖² + 2S`, both select the
//!   same centroid in exact arithmetic.
//! * [`encode_blocked`] computes `S` for `w` centroids at a time from the
//!   transposed codebook: `w` lane accumulators, one broadcast multiply-add
//!   per dimension, a block argmin, and a running global minimum.
//!
//! All variants break ties toward the smaller centroid index. Every lane of
//! the blocked kernel accumulates its inner product in dimension order, the
//! same order the scalar score uses, so blocked scores are bitwise equal to
//! the reformulated scores for every `w`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::codebook::Codebook;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncoderVariant {
    Reference,
    Reformulated,
    Blocked,
}

impl EncoderVariant {
    pub const ALL: [EncoderVariant; 3] = [
        EncoderVariant::Reference,
        EncoderVariant::Reformulated,
        EncoderVariant::Blocked,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncoderVariant::Reference => "reference",
            EncoderVariant::Reformulated => "reformulated",
            EncoderVariant::Blocked => "blocked",
        }
    }
}

impl fmt::Display for EncoderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncoderVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" | "ref" => Ok(EncoderVariant::Reference),
            "reformulated" | "reform" => Ok(EncoderVariant::Reformulated),
            "blocked" => Ok(EncoderVariant::Blocked),
            _ => Err(Error::Config("unknown encoder variant")),
        }
    }
}

/// Where the blocked kernel takes its bias terms from.
///
/// `PerVector` recomputes `½‖c‖²` from the transposed layout on every call.
/// It exists so benchmarks can isolate the gain of precomputing biases; the
/// recomputed values are bitwise equal to the stored ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiasSource {
    #[default]
    Precomputed,
    PerVector,
}

#[inline(always)]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Squared distance through its expansion, term by term.
#[inline]
pub fn expanded_distance(v: &[f32], c: &[f32]) -> f32 {
    let v_norm = dot(v, v);
    let c_norm = dot(c, c);
    let ip = dot(v, c);
    v_norm + c_norm - 2.0 * ip
}

/// Ranking score `bias − ⟨v, c⟩`, with `bias = ½‖c‖²`.
#[inline]
pub fn reformulated_score(v: &[f32], c: &[f32], bias: f32) -> f32 {
    bias - dot(v, c)
}

fn check_subvector(v: &[f32], cb: &Codebook) -> Result<()> {
    if v.len() != cb.sub_dim() {
        return Err(Error::DimensionMismatch {
            expected: cb.sub_dim(),
            got: v.len(),
        });
    }
    Ok(())
}

pub fn encode_ref(v: &[f32], cb: &Codebook) -> Result<usize> {
    check_subvector(v, cb)?;
    Ok(encode_ref_unchecked(v, cb))
}

pub fn encode_reform(v: &[f32], cb: &Codebook) -> Result<usize> {
    check_subvector(v, cb)?;
    Ok(encode_reform_unchecked(v, cb))
}

pub fn encode_blocked(v: &[f32], cb: &Codebook, w: usize) -> Result<usize> {
    encode_blocked_with(v, cb, w, BiasSource::Precomputed)
}

pub fn encode_blocked_with(v: &[f32], cb: &Codebook, w: usize, bias: BiasSource) -> Result<usize> {
    check_subvector(v, cb)?;
    if w == 0 {
        return Err(Error::Config("lane width must be at least 1"));
    }
    Ok(encode_blocked_unchecked(v, cb, w, bias))
}

pub(crate) fn encode_ref_unchecked(v: &[f32], cb: &Codebook) -> usize {
    let mut best = f32::INFINITY;
    let mut best_idx = 0;
    for (l, c) in cb.centroids().enumerate() {
        let d = expanded_distance(v, c);
        if d < best {
            best = d;
            best_idx = l;
        }
    }
    best_idx
}

pub(crate) fn encode_reform_unchecked(v: &[f32], cb: &Codebook) -> usize {
    let mut best = f32::INFINITY;
    let mut best_idx = 0;
    for (l, (c, &b)) in cb.centroids().zip(cb.biases()).enumerate() {
        let s = reformulated_score(v, c, b);
        if s < best {
            best = s;
            best_idx = l;
        }
    }
    best_idx
}

pub(crate) fn encode_blocked_unchecked(v: &[f32], cb: &Codebook, w: usize, bias: BiasSource) -> usize {
    match bias {
        BiasSource::Precomputed => dispatch::<true>(v, cb, w),
        BiasSource::PerVector => dispatch::<false>(v, cb, w),
    }
}

#[inline(always)]
fn dispatch<const PRECOMPUTED: bool>(v: &[f32], cb: &Codebook, w: usize) -> usize {
    match w {
        1 => blocked::<1, PRECOMPUTED>(v, cb),
        2 => blocked::<2, PRECOMPUTED>(v, cb),
        4 => blocked::<4, PRECOMPUTED>(v, cb),
        8 => blocked::<8, PRECOMPUTED>(v, cb),
        16 => blocked::<16, PRECOMPUTED>(v, cb),
        32 => blocked::<32, PRECOMPUTED>(v, cb),
        _ => blocked_any_width::<PRECOMPUTED>(v, cb, w),
    }
}

/// Transient state of one blocked-kernel invocation.
///
/// `acc` holds the partial inner products of the current centroid block.
/// Each lane keeps its own running minimum and where it was found, so the
/// per-block update is a lane-wise compare and select; lanes are merged
/// once at the end. Nothing here outlives the call.
#[derive(Debug, Clone, Copy)]
pub struct ScoreBlock<const W: usize> {
    pub acc: [f32; W],
    pub best: [f32; W],
    pub best_at: [u32; W],
}

impl<const W: usize> ScoreBlock<W> {
    pub fn new() -> Self {
        ScoreBlock {
            acc: [0.0; W],
            best: [f32::INFINITY; W],
            best_at: [0; W],
        }
    }

    /// Folds the scores `bias - acc` of the block starting at `base` into
    /// the lane minima. Strict comparison keeps the earlier index per lane.
    #[inline(always)]
    fn fold(&mut self, base: usize, bias: &[f32; W]) {
        for lane in 0..W {
            let s = bias[lane] - self.acc[lane];
            let lt = s < self.best[lane];
            self.best[lane] = if lt { s } else { self.best[lane] };
            self.best_at[lane] = if lt { (base + lane) as u32 } else { self.best_at[lane] };
        }
    }

    /// Smallest score over all lanes; ties go to the smaller index.
    #[inline(always)]
    pub fn finish(&self) -> (f32, usize) {
        let mut score = self.best[0];
        let mut idx = self.best_at[0];
        for lane in 1..W {
            let (s, i) = (self.best[lane], self.best_at[lane]);
            if s < score || (s == score && i < idx) {
                score = s;
                idx = i;
            }
        }
        (score, idx as usize)
    }
}

impl<const W: usize> Default for ScoreBlock<W> {
    fn default() -> Self {
        Self::new()
    }
}

#[inline(always)]
fn blocked<const W: usize, const PRECOMPUTED: bool>(v: &[f32], cb: &Codebook) -> usize {
    let k = cb.k();
    let ct = cb.transposed();
    let biases = cb.biases();
    let mut state = ScoreBlock::<W>::new();

    let full = k - k % W;
    let mut base = 0;
    while base < full {
        let mut acc = [0.0f32; W];
        for (row, &x) in ct.chunks_exact(k).zip(v) {
            let row: &[f32; W] = row[base..base + W].try_into().unwrap();
            for lane in 0..W {
                acc[lane] += x * row[lane];
            }
        }
        state.acc = acc;
        if PRECOMPUTED {
            state.fold(base, biases[base..base + W].try_into().unwrap());
        } else {
            let mut sq = [0.0f64; W];
            for row in ct.chunks_exact(k) {
                let row: &[f32; W] = row[base..base + W].try_into().unwrap();
                for lane in 0..W {
                    let c = row[lane] as f64;
                    sq[lane] += c * c;
                }
            }
            state.fold(base, &sq.map(|q| (0.5 * q) as f32));
        }
        base += W;
    }
    let (mut best_score, mut best_idx) = state.finish();

    // Masked remainder block: the first k - full lanes only. Its indices
    // all exceed those already seen, so only a strictly smaller score wins.
    if full < k {
        let lanes = k - full;
        state.acc = [0.0; W];
        for (row, &x) in ct.chunks_exact(k).zip(v) {
            let row = &row[full..];
            for lane in 0..lanes {
                state.acc[lane] += x * row[lane];
            }
        }
        for lane in 0..lanes {
            let bias = if PRECOMPUTED {
                biases[full + lane]
            } else {
                per_vector_bias(ct, k, v.len(), full + lane)
            };
            let s = bias - state.acc[lane];
            if s < best_score {
                best_score = s;
                best_idx = full + lane;
            }
        }
    }
    best_idx
}

const MAX_DYN_LANES: usize = 64;

/// Arbitrary `w`: blocks of `w` centroids, each evaluated in runs of at
/// most [`MAX_DYN_LANES`] lanes before its block argmin is taken.
fn blocked_any_width<const PRECOMPUTED: bool>(v: &[f32], cb: &Codebook, w: usize) -> usize {
    let k = cb.k();
    let ct = cb.transposed();
    let biases = cb.biases();
    let mut acc = [0.0f32; MAX_DYN_LANES];
    let mut best_score = f32::INFINITY;
    let mut best_idx = 0;

    let mut base = 0;
    while base < k {
        let block_end = (base + w).min(k);
        let mut blk_min = f32::INFINITY;
        let mut blk_idx = base;
        let mut run = base;
        while run < block_end {
            let lanes = (block_end - run).min(MAX_DYN_LANES);
            acc[..lanes].fill(0.0);
            for (t, &x) in v.iter().enumerate() {
                let row = &ct[t * k + run..t * k + run + lanes];
                for (a, &c) in acc[..lanes].iter_mut().zip(row) {
                    *a += x * c;
                }
            }
            for (lane, &a) in acc[..lanes].iter().enumerate() {
                let bias = if PRECOMPUTED {
                    biases[run + lane]
                } else {
                    per_vector_bias(ct, k, v.len(), run + lane)
                };
                let s = bias - a;
                if s < blk_min {
                    blk_min = s;
                    blk_idx = run + lane;
                }
            }
            run += lanes;
        }
        if blk_min < best_score || (blk_min == best_score && blk_idx < best_idx) {
            best_score = blk_min;
            best_idx = blk_idx;
        }
        base = block_end;
    }
    best_idx
}

#[inline(always)]
fn per_vector_bias(ct: &[f32], k: usize, sub_dim: usize, l: usize) -> f32 {
    let mut sq = 0.0f64;
    for t in 0..sub_dim {
        let c = ct[t * k + l] as f64;
        sq += c * c;
    }
    (0.5 * sq) as f32
}

/// Checks that `codebooks` form a uniform quantizer for `d`-dimensional
/// vectors and returns `(m, sub_dim, k)`.
pub(crate) fn check_codebooks(codebooks: &[Codebook], d: usize) -> Result<(usize, usize, usize)> {
    let first = codebooks
        .first()
        .ok_or(Error::Config("at least one codebook is required"))?;
    let (sub_dim, k) = (first.sub_dim(), first.k());
    for (j, cb) in codebooks.iter().enumerate() {
        if cb.sub_dim() != sub_dim {
            return Err(Error::DimensionMismatch {
                expected: sub_dim,
                got: cb.sub_dim(),
            }
            .in_chunk(j));
        }
        if cb.k() != k {
            return Err(Error::Config("codebooks must share k").in_chunk(j));
        }
    }
    let m = codebooks.len();
    if m * sub_dim != d {
        return Err(Error::DimensionMismatch {
            expected: m * sub_dim,
            got: d,
        });
    }
    Ok((m, sub_dim, k))
}

/// Encoder for one subvector: `(subvector, codebook, w) -> index`.
pub(crate) type Kernel = fn(&[f32], &Codebook, usize) -> usize;

fn blocked_kernel<const W: usize, const PRECOMPUTED: bool>(v: &[f32], cb: &Codebook, _w: usize) -> usize {
    blocked::<W, PRECOMPUTED>(v, cb)
}

fn any_width_kernel<const PRECOMPUTED: bool>(v: &[f32], cb: &Codebook, w: usize) -> usize {
    blocked_any_width::<PRECOMPUTED>(v, cb, w)
}

/// Resolves the kernel once so bulk loops do not dispatch per subvector.
pub(crate) fn select_kernel(variant: EncoderVariant, w: usize, bias: BiasSource) -> Kernel {
    fn widths<const P: bool>(w: usize) -> Kernel {
        match w {
            1 => blocked_kernel::<1, P>,
            2 => blocked_kernel::<2, P>,
            4 => blocked_kernel::<4, P>,
            8 => blocked_kernel::<8, P>,
            16 => blocked_kernel::<16, P>,
            32 => blocked_kernel::<32, P>,
            _ => any_width_kernel::<P>,
        }
    }
    match (variant, bias) {
        (EncoderVariant::Reference, _) => |v, cb, _| encode_ref_unchecked(v, cb),
        (EncoderVariant::Reformulated, _) => |v, cb, _| encode_reform_unchecked(v, cb),
        (EncoderVariant::Blocked, BiasSource::Precomputed) => widths::<true>(w),
        (EncoderVariant::Blocked, BiasSource::PerVector) => widths::<false>(w),
    }
}

/// Encodes a full vector, one code per chunk, into `out`.
pub fn encode_vector_into(
    v: &[f32],
    codebooks: &[Codebook],
    variant: EncoderVariant,
    w: usize,
    out: &mut [u16],
) -> Result<()> {
    let (m, sub_dim, _) = check_codebooks(codebooks, v.len())?;
    if out.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: out.len(),
        });
    }
    if w == 0 {
        return Err(Error::Config("lane width must be at least 1"));
    }
    for (j, ((sub, cb), code)) in v.chunks_exact(sub_dim).zip(codebooks).zip(out).enumerate() {
        let idx = match variant {
            EncoderVariant::Reference => encode_ref(sub, cb),
            EncoderVariant::Reformulated => encode_reform(sub, cb),
            EncoderVariant::Blocked => encode_blocked(sub, cb, w),
        }
        .map_err(|e| e.in_chunk(j))?;
        *code = idx as u16;
    }
    Ok(())
}

pub fn encode_vector(v: &[f32], codebooks: &[Codebook], variant: EncoderVariant, w: usize) -> Result<Vec<u16>> {
    let mut out = alloc::vec![0u16; codebooks.len()];
    encode_vector_into(v, codebooks, variant, w, &mut out)?;
    Ok(out)
}
