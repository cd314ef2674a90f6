//! Saliency grids and the normalization / resampling primitives shared by every
//! other module.
//!
//! Values are kept as `f64` in row-major order. A grid can carry a `normalized`
//! flag, which is only ever set by operations that guarantee a pixel sum of one
//! within [`NORMALIZED_TOL`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Maximum deviation of the pixel sum from one for a grid flagged as normalized.
pub const NORMALIZED_TOL: f64 = 1e-9;

/// Non-fatal conditions reported alongside a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridWarning {
    /// Min-max rescaling saw a constant grid and returned all zeros.
    ConstantGrid,
}

/// A value together with any warning raised while producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Warned<T> {
    pub value: T,
    pub warning: Option<GridWarning>,
}

impl<T> Warned<T> {
    pub fn clean(value: T) -> Self {
        Self { value, warning: None }
    }

    pub fn into_inner(self) -> T {
        self.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
    normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStats {
    pub min: f64,
    pub max: f64,
    pub sum: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

impl SaliencyGrid {
    /// Builds a grid from row-major values, rejecting negative or non-finite
    /// entries.
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ZeroDim { height, width });
        }
        if values.len() != height * width {
            return Err(Error::LengthMismatch { height, width, got: values.len() });
        }
        if let Some((index, &value)) =
            values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidValue { index, value });
        }
        Ok(Self { height, width, values, normalized: false })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ZeroDim { height, width });
        }
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds a grid by evaluating `f(row, col)` for every cell.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ZeroDim { height, width });
        }
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::new(height, width, values)
    }

    /// Unchecked constructor for values produced by this crate's own arithmetic.
    pub(crate) fn from_parts(height: usize, width: usize, values: Vec<f64>, normalized: bool) -> Self {
        debug_assert_eq!(values.len(), height * width);
        Self { height, width, values, normalized }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// True when the grid was produced by a sum-to-one normalization.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn ensure_same_dims(&self, other: &SaliencyGrid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimMismatch { left: self.dims(), right: other.dims() });
        }
        Ok(())
    }

    /// Checks the pixel sum is one within `tol`.
    pub fn ensure_distribution(&self, tol: f64) -> Result<()> {
        let sum = self.sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotNormalized { sum });
        }
        Ok(())
    }

    /// Affine rescale to `[0, 1]`. A constant grid maps to all zeros with a
    /// [`GridWarning::ConstantGrid`] warning.
    pub fn minmax_normalize(&self) -> Warned<SaliencyGrid> {
        let (values, warning) = minmax(&self.values);
        Warned { value: Self::from_parts(self.height, self.width, values, false), warning }
    }

    /// `x_i = exp(x_i) / sum_j exp(x_j)`. Sets the normalized flag.
    pub fn softmax_normalize(&self) -> SaliencyGrid {
        self.softmax_normalize_scaled(1.0)
    }

    /// Softmax of `scale * x`. `scale = 1` is the plain softmax.
    pub fn softmax_normalize_scaled(&self, scale: f64) -> SaliencyGrid {
        Self::from_parts(self.height, self.width, softmax(&self.values, scale), true)
    }

    /// Divides every value by the pixel sum.
    pub fn sum_normalize(&self) -> Result<SaliencyGrid> {
        let sum = self.sum();
        if sum <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let values = self.values.iter().map(|v| v / sum).collect();
        Ok(Self::from_parts(self.height, self.width, values, true))
    }

    /// Bilinear resampling with half-pixel-center alignment. A normalized input
    /// yields a normalized output.
    pub fn resample(&self, new_h: usize, new_w: usize) -> Result<SaliencyGrid> {
        if new_h == 0 || new_w == 0 {
            return Err(Error::ZeroDim { height: new_h, width: new_w });
        }
        if (new_h, new_w) == self.dims() {
            return Ok(self.clone());
        }
        let sy = self.height as f64 / new_h as f64;
        let sx = self.width as f64 / new_w as f64;
        let mut values = Vec::with_capacity(new_h * new_w);
        for r in 0..new_h {
            let y = (r as f64 + 0.5) * sy - 0.5;
            for c in 0..new_w {
                let x = (c as f64 + 0.5) * sx - 0.5;
                values.push(self.sample_bilinear(y, x));
            }
        }
        let out = Self::from_parts(new_h, new_w, values, false);
        if self.normalized {
            // Strong downsampling can miss isolated mass entirely; that surfaces
            // as ZeroMass here.
            out.sum_normalize()
        } else {
            Ok(out)
        }
    }

    /// Area-weighted downsampling: every output cell receives the input mass
    /// overlapping its footprint, so the total mass is preserved exactly up to
    /// rounding. Only shrinking is allowed.
    pub fn downsample_area(&self, new_h: usize, new_w: usize) -> Result<SaliencyGrid> {
        if new_h == 0 || new_w == 0 {
            return Err(Error::ZeroDim { height: new_h, width: new_w });
        }
        if new_h > self.height || new_w > self.width {
            return Err(Error::OutOfRange { what: "downsample target size", value: (new_h * new_w) as f64 });
        }
        if (new_h, new_w) == self.dims() {
            return Ok(self.clone());
        }
        let rows = overlap_weights(self.height, new_h);
        let cols = overlap_weights(self.width, new_w);
        let mut values = vec![0.0; new_h * new_w];
        for &(src_r, dst_r, wr) in &rows {
            for &(src_c, dst_c, wc) in &cols {
                values[dst_r * new_w + dst_c] += self.get(src_r, src_c) * wr * wc;
            }
        }
        let normalized = self.normalized && (values_sum(&values) - 1.0).abs() <= NORMALIZED_TOL;
        Ok(Self::from_parts(new_h, new_w, values, normalized))
    }

    /// Bilinear interpolation at a continuous position measured in source
    /// cell-center coordinates (cell `(r, c)` sits at `(r, c)`). Positions
    /// outside the grid clamp to the border.
    pub fn sample_bilinear(&self, y: f64, x: f64) -> f64 {
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y0 = libm::floor(y) as usize;
        let x0 = libm::floor(x) as usize;
        let y1 = (y0 + 1).min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let fy = y - y0 as f64;
        let fx = x - x0 as f64;
        let top = self.get(y0, x0) * (1.0 - fx) + self.get(y0, x1) * fx;
        let bottom = self.get(y1, x0) * (1.0 - fx) + self.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    pub fn stats(&self) -> GridStats {
        stats(&self.values)
    }

    /// Element-wise combination of two same-sized grids.
    pub(crate) fn zip_map(&self, other: &SaliencyGrid, f: impl Fn(f64, f64) -> f64) -> Result<SaliencyGrid> {
        self.ensure_same_dims(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_parts(self.height, self.width, values, false))
    }
}

fn values_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// `(source index, target index, fraction of the source cell)` triples for
/// splitting `n_src` unit cells across `n_dst` equal target cells.
fn overlap_weights(n_src: usize, n_dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = n_dst as f64 / n_src as f64;
    let mut out = Vec::new();
    for s in 0..n_src {
        let lo = s as f64 * scale;
        let hi = (s + 1) as f64 * scale;
        let first = libm::floor(lo) as usize;
        let last = (libm::ceil(hi) as usize).min(n_dst);
        for d in first..last {
            let overlap = hi.min((d + 1) as f64) - lo.max(d as f64);
            if overlap > 0.0 {
                out.push((s, d, overlap / scale));
            }
        }
    }
    out
}

/// Min-max rescale of raw values. Accepts any finite input, including
/// negative values. The flag is set when the input is constant.
pub fn minmax(values: &[f64]) -> (Vec<f64>, Option<GridWarning>) {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return (vec![0.0; values.len()], Some(GridWarning::ConstantGrid));
    }
    (values.iter().map(|&v| (v - lo) / range).collect(), None)
}

/// Numerically stable softmax of `scale * values`.
pub fn softmax(values: &[f64], scale: f64) -> Vec<f64> {
    let peak = values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(scale * v));
    let mut out: Vec<f64> = values.iter().map(|&v| libm::exp(scale * v - peak)).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

pub fn stats(values: &[f64]) -> GridStats {
    let n = values.len() as f64;
    let (min, max, sum) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), &v| (lo.min(v), hi.max(v), s + v));
    let mean = (sum / n).clamp(min, max);
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    GridStats { min, max, sum, mean, stddev: libm::sqrt(var) }
}
