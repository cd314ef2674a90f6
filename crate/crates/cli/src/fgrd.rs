//! FGRD: a small binary container for one float grid.
//!
//! ```text
//! "FGRD" | u8 version | u32 LE height | u32 LE width | f32 LE payload (row-major) | u64 LE XXH64(payload)
//! ```
//!
//! Values are stored as `f32`, so a round trip is exact only up to single
//! precision.

use std::fs;
use std::io;
use std::path::Path;

use persal_core::SaliencyGrid;
use thiserror::Error;
use xxhash_rust::xxh64::xxh64;

pub const MAGIC: &[u8; 4] = b"FGRD";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 4 + 4;
pub const CHECKSUM_LEN: usize = 8;
const CHECKSUM_SEED: u64 = 0;

#[derive(Debug, Error)]
pub enum FgrdError {
    #[error("not an FGRD file (bad magic)")]
    BadMagic,
    #[error("unsupported FGRD version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("{extra} unexpected bytes after the checksum")]
    TrailingData { extra: u64 },
    #[error("checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(#[from] persal_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode(grid: &SaliencyGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * grid.len() + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    for &v in grid.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let checksum = xxh64(&out[HEADER_LEN..], CHECKSUM_SEED);
    out.extend_from_slice(&checksum.to_le_bytes());
    out
}

pub fn decode(bytes: &[u8]) -> Result<SaliencyGrid, FgrdError> {
    let found = bytes.len() as u64;
    if bytes.len() < HEADER_LEN {
        if !bytes.is_empty() && !MAGIC.starts_with(&bytes[..bytes.len().min(4)]) {
            return Err(FgrdError::BadMagic);
        }
        return Err(FgrdError::TruncatedFile { expected: (HEADER_LEN + CHECKSUM_LEN) as u64, found });
    }
    if &bytes[..4] != MAGIC {
        return Err(FgrdError::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(FgrdError::UnsupportedVersion(bytes[4]));
    }
    let height = u32::from_le_bytes(bytes[5..9].try_into().unwrap());
    let width = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    let payload_len = 4 * height as u64 * width as u64;
    let expected = HEADER_LEN as u64 + payload_len + CHECKSUM_LEN as u64;
    if found < expected {
        return Err(FgrdError::TruncatedFile { expected, found });
    }
    if found > expected {
        return Err(FgrdError::TrailingData { extra: found - expected });
    }
    let payload_end = HEADER_LEN + payload_len as usize;
    let payload = &bytes[HEADER_LEN..payload_end];
    let stored = u64::from_le_bytes(bytes[payload_end..].try_into().unwrap());
    let computed = xxh64(payload, CHECKSUM_SEED);
    if stored != computed {
        return Err(FgrdError::ChecksumMismatch { stored, computed });
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    Ok(SaliencyGrid::new(height as usize, width as usize, values)?)
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<SaliencyGrid, FgrdError> {
    decode(&fs::read(path)?)
}

pub fn write_grid(grid: &SaliencyGrid, path: impl AsRef<Path>) -> Result<(), FgrdError> {
    fs::write(path, encode(grid))?;
    Ok(())
}
