//! Comparison baselines: the dataset center prior, and a detection map that
//! highlights detected objects by confidence times preference.
//!
//! When the detection map would be empty (nothing passes the threshold, or
//! every passing object has zero preference) it is replaced by a seeded
//! uniform random map, so every image still yields a distribution.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::SaliencyGrid;
use crate::preference::{CategoryMapping, DetectionSet, PreferenceVector};
use crate::raster::{covered_cells, COCO_CONFIDENCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BaselineKind {
    CenterPrior,
    Detection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub seed: u64,
    pub confidence_threshold: f64,
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind, seed: u64, confidence_threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence_threshold) {
            return Err(Error::OutOfRange { what: "confidence_threshold", value: confidence_threshold });
        }
        Ok(Self { kind, seed, confidence_threshold })
    }

    pub fn detection(seed: u64) -> Self {
        Self { kind: BaselineKind::Detection, seed, confidence_threshold: COCO_CONFIDENCE }
    }
}

/// The center prior rescaled to unit mass.
pub fn center_prior_baseline(prior: &SaliencyGrid) -> Result<SaliencyGrid> {
    prior.sum_normalize()
}

/// Outcome of [`detection_baseline`], flagging which branch produced the map.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionBaseline {
    pub grid: SaliencyGrid,
    pub random_fallback: bool,
}

pub fn detection_baseline(
    dets: &DetectionSet,
    mapping: &CategoryMapping,
    pvec: &PreferenceVector,
    cfg: &BaselineConfig,
    grid_h: usize,
    grid_w: usize,
) -> Result<DetectionBaseline> {
    pvec.ensure_covers(mapping)?;
    if grid_h == 0 || grid_w == 0 {
        return Err(Error::ZeroDim { height: grid_h, width: grid_w });
    }
    let mut values = vec![0.0f64; grid_h * grid_w];
    for d in dets.detections().iter().filter(|d| d.confidence >= cfg.confidence_threshold) {
        let score = d.confidence * pvec.weight(mapping.lookup(d.category_id)?);
        let Some((rows, cols)) = covered_cells(&d.bbox, dets.image_w(), dets.image_h(), grid_h, grid_w) else {
            continue;
        };
        for r in rows {
            for c in cols.clone() {
                let cell = &mut values[r * grid_w + c];
                *cell = cell.max(score);
            }
        }
    }
    let map = SaliencyGrid::from_parts(grid_h, grid_w, values, false);
    match map.sum_normalize() {
        Ok(grid) => Ok(DetectionBaseline { grid, random_fallback: false }),
        Err(Error::ZeroMass) => Ok(DetectionBaseline { grid: random_map(cfg.seed, grid_h, grid_w), random_fallback: true }),
        Err(e) => Err(e),
    }
}

/// Uniform(0, 1) values from ChaCha8 seeded with `seed`, normalized to unit
/// mass.
pub fn random_map(seed: u64, grid_h: usize, grid_w: usize) -> SaliencyGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..grid_h * grid_w).map(|_| rng.random::<f64>()).collect();
    if values.iter().all(|&v| v == 0.0) {
        values.fill(1.0);
    }
    SaliencyGrid::from_parts(grid_h, grid_w, values, false)
        .sum_normalize()
        .expect("fallback map has positive mass")
}

/// Derives a per-image fallback seed from a run seed and the image's position
/// in the (sorted) dataset, so images do not share one random map.
pub fn image_seed(seed: u64, image_index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ image_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
