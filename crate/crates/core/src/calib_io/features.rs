//! Binary feature streams.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size      | field                         |
//! |--------|-----------|-------------------------------|
//! | 0      | 4         | magic `VDFS`                  |
//! | 4      | 2         | version (u16, = 1)            |
//! | 6      | 4         | view id (u32)                 |
//! | 10     | 4         | rows T (u32)                  |
//! | 14     | 4         | dim D (u32)                   |
//! | 18     | 4·T·D     | f32 values, row-major         |

use crate::{Error, Result, ViewId};

pub const MAGIC: &[u8; 4] = b"VDFS";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 18;

/// `T × D` per-second features of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStream {
    view_id: ViewId,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureStream {
    pub fn new(view_id: ViewId, dim: usize, data: Vec<f32>) -> Result<FeatureStream> {
        if dim == 0 {
            return Err(Error::invalid(None, "feature dimension must be positive"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                None,
                format!("{} values do not form a non-empty matrix with {dim} columns", data.len()),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(None, format!("non-finite value at row {} col {}", i / dim, i % dim)));
        }
        Ok(FeatureStream { view_id, dim, data })
    }

    pub fn from_rows(view_id: ViewId, rows: &[Vec<f64>]) -> Result<FeatureStream> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid(None, "rows have differing lengths"));
        }
        FeatureStream::new(view_id, dim, rows.iter().flatten().map(|&v| v as f32).collect())
    }

    pub fn view_id(&self) -> ViewId {
        self.view_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn row_f64(&self, t: usize) -> Vec<f64> {
        self.row(t).iter().map(|&v| f64::from(v)).collect()
    }
}

pub fn write_feature_stream(stream: &FeatureStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * stream.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&stream.view_id.0.to_le_bytes());
    out.extend_from_slice(&(stream.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(stream.dim as u32).to_le_bytes());
    for v in &stream.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn le_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

pub fn read_feature_stream(bytes: &[u8]) -> Result<FeatureStream> {
    if bytes.len() < MAGIC.len() {
        return Err(Error::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:02x?}, expected `VDFS`", &bytes[..4])));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let view_id = ViewId(le_u32(bytes, 6));
    let rows = le_u32(bytes, 10) as usize;
    let dim = le_u32(bytes, 14) as usize;
    if rows == 0 || dim == 0 {
        return Err(Error::invalid(None, format!("empty feature matrix ({rows} x {dim})")));
    }
    let expected = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("matrix {rows} x {dim} too large")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Truncated { expected, found: payload.len() });
    }
    let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk"))).collect();
    FeatureStream::new(view_id, dim, data)
}
