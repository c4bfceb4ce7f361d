//! CMTF1 tensor files: `CMTF`, version byte, rank byte, little-endian u32
//! dims, then row-major little-endian f32 values.

use std::fs;
use std::path::Path;

use xmodal_core::numerics::Tensor;

use crate::error::{Failure, Result};

const MAGIC: &[u8; 4] = b"CMTF";
const VERSION: u8 = 1;

pub fn encode(t: &Tensor) -> Result<Vec<u8>> {
    let rank = u8::try_from(t.rank()).map_err(|_| Failure::data("tensor rank above 255"))?;
    let mut out = Vec::with_capacity(6 + 4 * t.rank() + 4 * t.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(rank);
    for &d in t.shape() {
        let d = u32::try_from(d).map_err(|_| Failure::data("dimension does not fit in u32"))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err(Failure::data("not a CMTF file"));
    }
    if bytes[4] != VERSION {
        return Err(Failure::data(format!(
            "unsupported CMTF version {}",
            bytes[4]
        )));
    }
    let rank = bytes[5] as usize;
    let header = 6 + 4 * rank;
    if bytes.len() < header {
        return Err(Failure::data("truncated CMTF header"));
    }
    let shape: Vec<usize> = bytes[6..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Failure::data("CMTF shape overflows"))?;
    let payload = &bytes[header..];
    if payload.len() != 4 * count {
        return Err(Failure::data(format!(
            "CMTF payload has {} bytes, shape {shape:?} needs {}",
            payload.len(),
            4 * count
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Tensor::new(shape, data).map_err(|e| Failure::data(e.to_string()))
}

pub fn write(path: &Path, t: &Tensor) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, encode(t)?).map_err(|e| Failure::from(e).context(path.display()))
}

pub fn read(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| Failure::from(e).context(path.display()))?;
    decode(&bytes).map_err(|e| e.context(path.display()))
}

/// Reads a rank-2 tensor, or a rank-1 tensor as a single row.
pub fn read_matrix(path: &Path) -> Result<Tensor> {
    let t = read(path)?;
    match t.rank() {
        2 => Ok(t),
        1 => {
            let n = t.len();
            t.reshape(vec![1, n])
                .map_err(|e| Failure::data(e.to_string()))
        }
        r => Err(Failure::data(format!(
            "{}: expected a matrix, found rank {r}",
            path.display()
        ))),
    }
}
