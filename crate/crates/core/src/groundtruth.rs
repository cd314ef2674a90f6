//! Personalized ground-truth synthesis and center-prior construction.
//!
//! A preference map assigns each cell the largest preference weight among the
//! annotated objects covering it. The personalized map blends the fixation map
//! `S` with it as `alpha*S + beta*S*P + gamma*P`, then min-max rescales and
//! softmax-normalizes the result into a distribution.
//!
//! `S` is min-max rescaled to `[0, 1]` before blending so the three weights
//! always act on the same scale regardless of the fixation map's peak height.

use alloc::vec;

use crate::error::{Error, Result};
use crate::grid::{SaliencyGrid, Warned};
use crate::preference::{CategoryMapping, DetectionSet, PreferenceVector};
use crate::raster::covered_cells;

/// Tolerance on `alpha + beta + gamma = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GtWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GtWeights {
    /// Fitted blend weights.
    pub const FITTED: GtWeights = GtWeights { alpha: 0.06, beta: 0.752, gamma: 0.188 };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let sum = alpha + beta + gamma;
        let valid = [alpha, beta, gamma].iter().all(|w| w.is_finite() && *w >= 0.0);
        if !valid || (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights { sum });
        }
        Ok(Self { alpha, beta, gamma })
    }
}

impl Default for GtWeights {
    fn default() -> Self {
        Self::FITTED
    }
}

/// A fixation map plus the ground-truth object boxes of the same image.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedImage {
    pub sal: SaliencyGrid,
    pub boxes: DetectionSet,
}

impl AnnotatedImage {
    /// Box confidences are forced to 1.0.
    pub fn new(sal: SaliencyGrid, boxes: DetectionSet) -> Self {
        Self { sal, boxes: boxes.as_ground_truth() }
    }
}

/// Per-cell maximum preference weight among the objects covering the cell.
pub fn pmap(
    boxes: &DetectionSet,
    mapping: &CategoryMapping,
    pvec: &PreferenceVector,
    grid_h: usize,
    grid_w: usize,
) -> Result<SaliencyGrid> {
    pvec.ensure_covers(mapping)?;
    if grid_h == 0 || grid_w == 0 {
        return Err(Error::ZeroDim { height: grid_h, width: grid_w });
    }
    let mut values = vec![0.0f64; grid_h * grid_w];
    for d in boxes.detections() {
        let weight = pvec.weight(mapping.lookup(d.category_id)?);
        let Some((rows, cols)) = covered_cells(&d.bbox, boxes.image_w(), boxes.image_h(), grid_h, grid_w) else {
            continue;
        };
        for r in rows {
            for c in cols.clone() {
                let cell = &mut values[r * grid_w + c];
                *cell = cell.max(weight);
            }
        }
    }
    Ok(SaliencyGrid::from_parts(grid_h, grid_w, values, false))
}

/// The un-normalized three-term blend, on a min-max rescaled fixation map.
pub fn blend(sal: &SaliencyGrid, pref: &SaliencyGrid, w: &GtWeights) -> Result<Warned<SaliencyGrid>> {
    let scaled = sal.minmax_normalize();
    let mixed = scaled
        .value
        .zip_map(pref, |s, p| w.alpha * s + w.beta * s * p + w.gamma * p)?;
    Ok(Warned { value: mixed, warning: scaled.warning })
}

/// Generates the personalized ground truth at the fixation map's resolution.
///
/// A constant (blank) fixation map or a constant blend is reported as a
/// warning; the output is still a valid distribution.
pub fn generate_psal(
    img: &AnnotatedImage,
    mapping: &CategoryMapping,
    pvec: &PreferenceVector,
    w: &GtWeights,
) -> Result<Warned<SaliencyGrid>> {
    let (h, wd) = img.sal.dims();
    let pref = pmap(&img.boxes, mapping, pvec, h, wd)?;
    psal_from_pmap(&img.sal, &pref, w)
}

/// As [`generate_psal`] with a precomputed preference map.
pub fn psal_from_pmap(sal: &SaliencyGrid, pref: &SaliencyGrid, w: &GtWeights) -> Result<Warned<SaliencyGrid>> {
    let mixed = blend(sal, pref, w)?;
    let rescaled = mixed.value.minmax_normalize();
    Ok(Warned { value: rescaled.value.softmax_normalize(), warning: mixed.warning.or(rescaled.warning) })
}

/// Sums fixation maps and min-max rescales the total to `[0, 1]`.
pub fn center_prior(sals: &[SaliencyGrid]) -> Result<Warned<SaliencyGrid>> {
    let first = sals.first().ok_or(Error::EmptyList)?;
    let mut total = vec![0.0; first.len()];
    for s in sals {
        first.ensure_same_dims(s)?;
        for (t, v) in total.iter_mut().zip(s.values()) {
            *t += v;
        }
    }
    Ok(SaliencyGrid::from_parts(first.height(), first.width(), total, false).minmax_normalize())
}
