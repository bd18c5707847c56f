//! Binary sample dumps.
//!
//! Layout (all little-endian): a 32-byte header
//!
//! | offset | size | field                 |
//! |--------|------|-----------------------|
//! | 0      | 4    | magic `WLAB`          |
//! | 4      | 4    | format version (u32)  |
//! | 8      | 8    | rows `n` (u64)        |
//! | 16     | 8    | columns `d` (u64)     |
//! | 24     | 8    | seed (u64)            |
//!
//! followed by `n * d` `f64` values in row-major order.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::Scalar;

pub const MAGIC: [u8; 4] = *b"WLAB";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct DumpedMatrix {
    pub version: u32,
    pub seed: u64,
    pub values: Array2<f64>,
}

pub fn write_matrix<T: Scalar, W: Write>(mut w: W, values: &Array2<T>, seed: u64) -> Result<()> {
    let (n, d) = values.dim();
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    header[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    header[16..24].copy_from_slice(&(d as u64).to_le_bytes());
    header[24..32].copy_from_slice(&seed.to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(n * d * 8);
    for v in values.iter() {
        body.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<DumpedMatrix> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let word = |range: std::ops::Range<usize>| u64::from_le_bytes(header[range].try_into().unwrap());
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = word(8..16) as usize;
    let d = word(16..24) as usize;
    let seed = word(24..32);
    let len = n
        .checked_mul(d)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let mut body = vec![0u8; len * 8];
    r.read_exact(&mut body)?;
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values = Array2::from_shape_vec((n, d), data).map_err(|e| Error::Format(e.to_string()))?;
    Ok(DumpedMatrix { version, seed, values })
}
