//! Binary block result records.
//!
//! Layout, all integers little-endian:
//!
//! | bytes       | field                                   |
//! |-------------|-----------------------------------------|
//! | 4           | magic `RNKY`                            |
//! | 2           | version (`u16`, 1)                      |
//! | 4           | block index (`u32`)                     |
//! | 4           | M (`u32`)                               |
//! | 4           | k (`u32`)                               |
//! | 8 * M * k   | `U S` payload, row-major IEEE-754 `f64` |
//! | 4           | CRC32 of the payload bytes (`u32`)      |

use std::fs;
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::svd::SvdResult;

pub const MAGIC: [u8; 4] = *b"RNKY";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 4;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockResultRecord {
    block: u32,
    m: u32,
    k: u32,
    payload: Vec<f64>,
    checksum: u32,
}

fn payload_crc(payload: &[f64]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for x in payload {
        h.update(&x.to_le_bytes());
    }
    h.finalize()
}

fn to_u32(x: usize, what: &str) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::Parameter(format!("{what} {x} does not fit in u32")))
}

impl BlockResultRecord {
    pub fn new(block: usize, m: usize, k: usize, payload: Vec<f64>) -> Result<Self> {
        if payload.len() != m * k {
            return Err(Error::Shape(format!(
                "payload of {} values for a {m}x{k} factor",
                payload.len()
            )));
        }
        let checksum = payload_crc(&payload);
        Ok(Self {
            block: to_u32(block, "block index")?,
            m: to_u32(m, "row count")?,
            k: to_u32(k, "column count")?,
            payload,
            checksum,
        })
    }

    /// Record carrying `U S` of a block decomposition.
    pub fn from_svd(block: usize, svd: &SvdResult) -> Result<Self> {
        let us = svd.scaled_u();
        Self::new(block, us.rows(), us.cols(), us.into_vec())
    }

    pub fn from_matrix(block: usize, factor: &DenseMatrix) -> Result<Self> {
        Self::new(
            block,
            factor.rows(),
            factor.cols(),
            factor.as_slice().to_vec(),
        )
    }

    pub fn block(&self) -> usize {
        self.block as usize
    }

    pub fn m(&self) -> usize {
        self.m as usize
    }

    pub fn k(&self) -> usize {
        self.k as usize
    }

    pub fn payload(&self) -> &[f64] {
        &self.payload
    }

    pub fn checksum(&self) -> u32 {
        self.checksum
    }

    pub fn factor(&self) -> DenseMatrix {
        DenseMatrix::from_row_major(self.m(), self.k(), self.payload.clone())
            .expect("length checked on construction")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.payload.len() + 4);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.block.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        out.extend_from_slice(&self.k.to_le_bytes());
        for x in &self.payload {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&self.checksum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |msg: String| Error::CorruptRecord(msg);
        if bytes.len() < HEADER_LEN + 4 {
            return Err(corrupt(format!("truncated: {} bytes", bytes.len())));
        }
        if bytes[..4] != MAGIC {
            return Err(corrupt("bad magic".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u16_at(4);
        if version != VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let (block, m, k) = (u32_at(6), u32_at(10), u32_at(14));
        let count = (m as usize)
            .checked_mul(k as usize)
            .filter(|c| c.checked_mul(8).is_some())
            .ok_or_else(|| corrupt("payload size overflows".into()))?;
        let expected = HEADER_LEN + 8 * count + 4;
        if bytes.len() != expected {
            return Err(corrupt(format!(
                "expected {expected} bytes for {m}x{k}, found {}",
                bytes.len()
            )));
        }
        let payload_bytes = &bytes[HEADER_LEN..HEADER_LEN + 8 * count];
        let payload: Vec<f64> = payload_bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let stored = u32_at(HEADER_LEN + 8 * count);
        let actual = crc32fast::hash(payload_bytes);
        if stored != actual {
            return Err(corrupt(format!(
                "checksum mismatch: stored {stored:08x}, computed {actual:08x}"
            )));
        }
        Ok(Self {
            block,
            m,
            k,
            payload,
            checksum: stored,
        })
    }
}

pub fn write_block_record(r: &BlockResultRecord, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, r.to_bytes())?;
    Ok(())
}

pub fn read_block_record(path: impl AsRef<Path>) -> Result<BlockResultRecord> {
    BlockResultRecord::from_bytes(&fs::read(path)?)
}
