//! 8-bit binary PGM (P5) export for quick visual inspection. Lossy.

use std::fs;
use std::io;
use std::path::Path;

use persal_core::SaliencyGrid;

/// Min-max scales to `0..=255`. A constant grid exports as all zeros.
pub fn encode(grid: &SaliencyGrid) -> Vec<u8> {
    let scaled = grid.minmax_normalize().value;
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    out.extend(scaled.values().iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn export_pgm(grid: &SaliencyGrid, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, encode(grid))
}
