//! IDX binary tensors: `00 00 <dtype> <ndims>`, then `ndims` big-endian u32
//! sizes, then row-major big-endian data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DTYPE_U8: u8 = 0x08;
pub const DTYPE_F32: u8 = 0x0D;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdxError {
    #[error("truncated header at offset {offset}: need {needed} bytes, have {available}")]
    TruncatedHeader { offset: usize, needed: usize, available: usize },
    #[error("bad magic at offset {offset}: expected 0x00, found {found:#04x}")]
    BadMagic { offset: usize, found: u8 },
    #[error("unsupported dtype {code:#04x} at offset 2")]
    UnsupportedDtype { code: u8 },
    #[error("zero dimensions declared at offset 3")]
    NoDimensions,
    #[error("declared sizes overflow at offset {offset}")]
    SizeOverflow { offset: usize },
    #[error("truncated data: payload ends at offset {offset}, expected end at {expected}")]
    TruncatedData { offset: usize, expected: usize },
    #[error("{extra} trailing bytes after offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IdxData {
    U8(Vec<u8>),
    F32(Vec<f32>),
}

impl IdxData {
    pub fn len(&self) -> usize {
        match self {
            IdxData::U8(v) => v.len(),
            IdxData::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> u8 {
        match self {
            IdxData::U8(_) => DTYPE_U8,
            IdxData::F32(_) => DTYPE_F32,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            IdxData::U8(v) => v.iter().map(|&b| b as f64).collect(),
            IdxData::F32(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: IdxData,
}

impl IdxTensor {
    pub fn new(dims: Vec<usize>, data: IdxData) -> Result<Self, IdxError> {
        let expected = element_count(&dims, 4)?;
        if expected != data.len() {
            return Err(IdxError::TruncatedData {
                offset: data.len(),
                expected,
            });
        }
        Ok(Self { dims, data })
    }

    pub fn dtype(&self) -> u8 {
        self.data.dtype()
    }
}

fn element_count(dims: &[usize], offset: usize) -> Result<usize, IdxError> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(IdxError::SizeOverflow { offset })
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor, IdxError> {
    if bytes.len() < 4 {
        return Err(IdxError::TruncatedHeader {
            offset: bytes.len(),
            needed: 4,
            available: bytes.len(),
        });
    }
    for (offset, &b) in bytes[..2].iter().enumerate() {
        if b != 0 {
            return Err(IdxError::BadMagic { offset, found: b });
        }
    }
    let dtype = bytes[2];
    let width = match dtype {
        DTYPE_U8 => 1,
        DTYPE_F32 => 4,
        code => return Err(IdxError::UnsupportedDtype { code }),
    };
    let ndims = bytes[3] as usize;
    if ndims == 0 {
        return Err(IdxError::NoDimensions);
    }
    let header_len = 4 + 4 * ndims;
    if bytes.len() < header_len {
        return Err(IdxError::TruncatedHeader {
            offset: bytes.len(),
            needed: header_len,
            available: bytes.len(),
        });
    }
    let dims: Vec<usize> = bytes[4..header_len]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let count = element_count(&dims, 4)?;
    let data_len = count
        .checked_mul(width)
        .ok_or(IdxError::SizeOverflow { offset: 4 })?;
    let expected = header_len
        .checked_add(data_len)
        .ok_or(IdxError::SizeOverflow { offset: 4 })?;
    if bytes.len() < expected {
        return Err(IdxError::TruncatedData {
            offset: bytes.len(),
            expected,
        });
    }
    if bytes.len() > expected {
        return Err(IdxError::TrailingBytes {
            offset: expected,
            extra: bytes.len() - expected,
        });
    }
    let payload = &bytes[header_len..];
    let data = match dtype {
        DTYPE_U8 => IdxData::U8(payload.to_vec()),
        _ => IdxData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_be_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
    };
    Ok(IdxTensor { dims, data })
}

pub fn encode_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = vec![0, 0, tensor.dtype(), tensor.dims.len() as u8];
    for &d in &tensor.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    match &tensor.data {
        IdxData::U8(v) => out.extend_from_slice(v),
        IdxData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_be_bytes())),
    }
    out
}
