//! Vector files (fvecs/ivecs/bvecs) and the codebook and code formats.
//!
//! Everything is little-endian. The `*vecs` formats are a sequence of
//! records, each a 4-byte dimension followed by that many values.
//!
//! Codebook file:
//!
//! ```text
//! 0   magic  "CSPQCBK\0"
//! 8   u32    version (1)
//! 12  u32    d
//! 16  u32    m
//! 20  u32    sub_dim
//! 24  u32    k
//! 28  m x { k*sub_dim f32 centroids (centroid-major), k f32 biases }
//! end u32    CRC-32 of all preceding bytes
//! ```
//!
//! Code file:
//!
//! ```text
//! 0   magic  "CSPQCOD\0"
//! 8   u32    version (1)
//! 12  u64    n
//! 20  u32    m
//! 24  u32    k
//! 28  u8     bytes per code (1 when k <= 256, else 2)
//! 29  3 bytes zero
//! 32  n*m codes
//! end u32    CRC-32 of all preceding bytes
//! ```
//!
//! The transposed codebook layout is never stored; it is rebuilt on load.

use std::fs;
use std::path::Path;

use cspq_core::{Codebook, PqCodes, VectorDataset};

use crate::error::{Error, Result};

pub const CODEBOOK_MAGIC: &[u8; 8] = b"CSPQCBK\0";
pub const CODES_MAGIC: &[u8; 8] = b"CSPQCOD\0";
pub const FORMAT_VERSION: u32 = 1;

const CODEBOOK_HEADER: usize = 28;
const CODES_HEADER: usize = 32;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

fn f32_at(bytes: &[u8], offset: usize) -> f32 {
    f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

/// Walks `*vecs` records with `elem` bytes per value, calling `visit` with
/// the offset of each value.
fn walk_vecs(bytes: &[u8], elem: usize, mut visit: impl FnMut(usize) -> Result<()>) -> Result<(usize, usize)> {
    if bytes.is_empty() {
        return Err(Error::format(0, "empty dataset"));
    }
    let mut offset = 0;
    let mut dim = None;
    let mut n = 0;
    while offset < bytes.len() {
        if bytes.len() - offset < 4 {
            return Err(Error::format(offset, "truncated record header"));
        }
        let d = i32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
        if d <= 0 {
            return Err(Error::format(offset, format!("invalid dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::format(offset, format!("dimension {d} differs from {expected}")));
            }
            Some(_) => {}
        }
        let body = offset + 4;
        if bytes.len() - body < d * elem {
            return Err(Error::format(offset, "truncated record"));
        }
        for i in 0..d {
            visit(body + i * elem)?;
        }
        offset = body + d * elem;
        n += 1;
    }
    Ok((n, dim.unwrap_or(0)))
}

pub fn parse_fvecs(bytes: &[u8], source: &str) -> Result<VectorDataset> {
    let mut data = Vec::with_capacity(bytes.len() / 4);
    let (_, d) = walk_vecs(bytes, 4, |off| {
        let x = f32_at(bytes, off);
        if !x.is_finite() {
            return Err(Error::format(off, "non-finite value"));
        }
        data.push(x);
        Ok(())
    })?;
    Ok(VectorDataset::new(d, data, source)?)
}

pub fn parse_bvecs(bytes: &[u8], source: &str) -> Result<VectorDataset> {
    let mut data = Vec::with_capacity(bytes.len());
    let (_, d) = walk_vecs(bytes, 1, |off| {
        data.push(bytes[off] as f32);
        Ok(())
    })?;
    Ok(VectorDataset::new(d, data, source)?)
}

/// Row-major matrix of non-negative integers, e.g. ground-truth neighbour ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMatrix {
    pub d: usize,
    pub data: Vec<u32>,
}

impl IdMatrix {
    pub fn n(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.data.len() / self.d
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks_exact(self.d.max(1))
    }

    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        self.rows().map(|r| r.iter().map(|&x| x as usize).collect()).collect()
    }
}

pub fn parse_ivecs(bytes: &[u8]) -> Result<IdMatrix> {
    let mut data = Vec::with_capacity(bytes.len() / 4);
    let (_, d) = walk_vecs(bytes, 4, |off| {
        let x = i32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        if x < 0 {
            return Err(Error::format(off, format!("negative index {x}")));
        }
        data.push(x as u32);
        Ok(())
    })?;
    Ok(IdMatrix { d, data })
}

pub fn fvecs_bytes(ds: &VectorDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(ds.n() * (4 + 4 * ds.d()));
    for row in ds.rows() {
        out.extend_from_slice(&(ds.d() as i32).to_le_bytes());
        for x in row {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn ivecs_bytes(m: &IdMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.data.len() * 4 + m.n() * 4);
    for row in m.rows() {
        out.extend_from_slice(&(m.d as i32).to_le_bytes());
        for &x in row {
            out.extend_from_slice(&(x as i32).to_le_bytes());
        }
    }
    out
}

pub fn read_fvecs(path: impl AsRef<Path>) -> Result<VectorDataset> {
    let path = path.as_ref();
    parse_fvecs(&read_file(path)?, &path.display().to_string())
}

pub fn read_bvecs(path: impl AsRef<Path>) -> Result<VectorDataset> {
    let path = path.as_ref();
    parse_bvecs(&read_file(path)?, &path.display().to_string())
}

pub fn read_ivecs(path: impl AsRef<Path>) -> Result<IdMatrix> {
    parse_ivecs(&read_file(path.as_ref())?)
}

pub fn write_fvecs(path: impl AsRef<Path>, ds: &VectorDataset) -> Result<()> {
    write_file(path.as_ref(), &fvecs_bytes(ds))
}

pub fn write_ivecs(path: impl AsRef<Path>, m: &IdMatrix) -> Result<()> {
    write_file(path.as_ref(), &ivecs_bytes(m))
}

/// Reads `.bvecs` files as bytes widened to `f32`, anything else as fvecs.
pub fn read_vectors(path: impl AsRef<Path>) -> Result<VectorDataset> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("bvecs") => read_bvecs(path),
        _ => read_fvecs(path),
    }
}

fn seal(mut bytes: Vec<u8>) -> Vec<u8> {
    let crc = crc32fast::hash(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    bytes
}

/// Checks magic, version and trailing CRC; returns the body without the CRC.
fn unseal<'a>(bytes: &'a [u8], magic: &[u8; 8], header: usize) -> Result<&'a [u8]> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        return Err(Error::format(0, "bad magic"));
    }
    if bytes.len() < header + 4 {
        return Err(Error::format(bytes.len(), "truncated header"));
    }
    let version = u32_at(bytes, 8);
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            offset: 8,
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let body_len = bytes.len() - 4;
    let stored = u32_at(bytes, body_len);
    let computed = crc32fast::hash(&bytes[..body_len]);
    if stored != computed {
        return Err(Error::Checksum {
            offset: body_len as u64,
            stored,
            computed,
        });
    }
    Ok(&bytes[..body_len])
}

pub fn codebooks_bytes(codebooks: &[Codebook]) -> Result<Vec<u8>> {
    let first = codebooks
        .first()
        .ok_or_else(|| Error::Usage("no codebooks to write".into()))?;
    let (k, sub_dim, m) = (first.k(), first.sub_dim(), codebooks.len());
    if codebooks.iter().any(|cb| cb.k() != k || cb.sub_dim() != sub_dim) {
        return Err(Error::Usage("codebooks must share k and sub_dim".into()));
    }
    let mut out = Vec::with_capacity(CODEBOOK_HEADER + m * k * (sub_dim + 1) * 4 + 4);
    out.extend_from_slice(CODEBOOK_MAGIC);
    for v in [FORMAT_VERSION, (m * sub_dim) as u32, m as u32, sub_dim as u32, k as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for cb in codebooks {
        for x in cb.rowmajor().iter().chain(cb.biases()) {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(seal(out))
}

pub fn parse_codebooks(bytes: &[u8]) -> Result<Vec<Codebook>> {
    let body = unseal(bytes, CODEBOOK_MAGIC, CODEBOOK_HEADER)?;
    let (d, m, sub_dim, k) = (
        u32_at(body, 12) as usize,
        u32_at(body, 16) as usize,
        u32_at(body, 20) as usize,
        u32_at(body, 24) as usize,
    );
    if m == 0 || sub_dim == 0 || k == 0 || d != m * sub_dim {
        return Err(Error::format(12, format!("inconsistent header d={d} m={m} sub_dim={sub_dim} k={k}")));
    }
    let per = k * (sub_dim + 1) * 4;
    let expected = CODEBOOK_HEADER + m * per;
    if body.len() != expected {
        return Err(Error::format(
            body.len().min(expected),
            format!("payload is {} bytes, header implies {}", body.len() - CODEBOOK_HEADER, expected - CODEBOOK_HEADER),
        ));
    }
    let mut codebooks = Vec::with_capacity(m);
    for j in 0..m {
        let start = CODEBOOK_HEADER + j * per;
        let floats: Vec<f32> = body[start..start + per]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let (centroids, biases) = floats.split_at(k * sub_dim);
        if let Some(i) = floats.iter().position(|x| !x.is_finite()) {
            return Err(Error::format(start + 4 * i, "non-finite value"));
        }
        codebooks.push(Codebook::with_biases(j, sub_dim, centroids.to_vec(), biases.to_vec())?);
    }
    Ok(codebooks)
}

pub fn write_codebooks(path: impl AsRef<Path>, codebooks: &[Codebook]) -> Result<()> {
    write_file(path.as_ref(), &codebooks_bytes(codebooks)?)
}

pub fn read_codebooks(path: impl AsRef<Path>) -> Result<Vec<Codebook>> {
    parse_codebooks(&read_file(path.as_ref())?)
}

pub fn code_width(k: usize) -> usize {
    if k <= 256 {
        1
    } else {
        2
    }
}

pub fn codes_bytes(codes: &PqCodes) -> Vec<u8> {
    let width = code_width(codes.k());
    let mut out = Vec::with_capacity(CODES_HEADER + codes.as_slice().len() * width + 4);
    out.extend_from_slice(CODES_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(codes.n() as u64).to_le_bytes());
    out.extend_from_slice(&(codes.m() as u32).to_le_bytes());
    out.extend_from_slice(&(codes.k() as u32).to_le_bytes());
    out.extend_from_slice(&[width as u8, 0, 0, 0]);
    if width == 1 {
        out.extend(codes.as_slice().iter().map(|&c| c as u8));
    } else {
        for &c in codes.as_slice() {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    seal(out)
}

/// Payload bytes of a code file (everything between header and CRC).
pub fn codes_payload(bytes: &[u8]) -> &[u8] {
    if bytes.len() < CODES_HEADER + 4 {
        return &[];
    }
    &bytes[CODES_HEADER..bytes.len() - 4]
}

pub fn parse_codes(bytes: &[u8]) -> Result<PqCodes> {
    let body = unseal(bytes, CODES_MAGIC, CODES_HEADER)?;
    let n = u64::from_le_bytes(body[12..20].try_into().unwrap()) as usize;
    let m = u32_at(body, 20) as usize;
    let k = u32_at(body, 24) as usize;
    let width = body[28] as usize;
    if m == 0 || k == 0 || k > cspq_core::params::MAX_K {
        return Err(Error::format(20, format!("invalid header m={m} k={k}")));
    }
    if width != code_width(k) {
        return Err(Error::format(28, format!("code width {width} does not match k={k}")));
    }
    if body[29..32] != [0, 0, 0] {
        return Err(Error::format(29, "reserved bytes must be zero"));
    }
    let expected = n
        .checked_mul(m)
        .and_then(|c| c.checked_mul(width))
        .ok_or_else(|| Error::format(12, "size overflow"))?;
    let payload = &body[CODES_HEADER..];
    if payload.len() != expected {
        return Err(Error::format(
            CODES_HEADER + payload.len().min(expected),
            format!("payload is {} bytes, header implies {expected}", payload.len()),
        ));
    }
    let raw: Vec<u16> = if width == 1 {
        payload.iter().map(|&b| b as u16).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .collect()
    };
    if let Some(pos) = raw.iter().position(|&c| c as usize >= k) {
        return Err(Error::format(CODES_HEADER + pos * width, format!("code {} out of range for k={k}", raw[pos])));
    }
    Ok(PqCodes::new(m, k, raw)?)
}

pub fn write_codes(path: impl AsRef<Path>, codes: &PqCodes) -> Result<()> {
    write_file(path.as_ref(), &codes_bytes(codes))
}

pub fn read_codes(path: impl AsRef<Path>) -> Result<PqCodes> {
    parse_codes(&read_file(path.as_ref())?)
}
