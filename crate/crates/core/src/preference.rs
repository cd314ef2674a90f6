//! Preference vectors, category mappings and detection sets.
//!
//! A user's preference towards super category `i` is the sum of detection
//! confidences falling into that super category, divided by the largest such
//! sum. Confidences are taken as given: detections are assumed to be
//! thresholded by the detector that produced them, so low-confidence entries
//! still contribute their (small) weight.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::CHANNEL_CAP;

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DEFAULT_WINDOW_DAYS: u32 = 90;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreferenceVector {
    names: Vec<String>,
    weights: Vec<f64>,
}

impl PreferenceVector {
    pub fn new(names: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if names.len() != weights.len() {
            return Err(Error::NamesWeightsMismatch { names: names.len(), weights: weights.len() });
        }
        if names.len() > CHANNEL_CAP {
            return Err(Error::TooManySuperCategories { got: names.len(), cap: CHANNEL_CAP });
        }
        if let Some(&w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::OutOfRange { what: "preference weight", value: w });
        }
        Ok(Self { names, weights })
    }

    pub fn zeros(names: Vec<String>) -> Result<Self> {
        let n = names.len();
        Self::new(names, vec![0.0; n])
    }

    /// Builds a vector from 0..=10 user ratings (`weight = rating / 10`).
    pub fn from_ratings(names: Vec<String>, ratings: &[u32]) -> Result<Self> {
        if let Some(&r) = ratings.iter().find(|&&r| r > 10) {
            return Err(Error::RatingOutOfRange(r));
        }
        Self::new(names, ratings.iter().map(|&r| r as f64 / 10.0).collect())
    }

    /// Appends zero-weight placeholder channels up to `channels`.
    pub fn pad_to_channels(&self, channels: usize) -> Result<Self> {
        if self.len() > channels {
            return Err(Error::TooManySuperCategories { got: self.len(), cap: channels });
        }
        let mut names = self.names.clone();
        let mut weights = self.weights.clone();
        for i in self.len()..channels {
            names.push(format!("<unused-{i}>"));
            weights.push(0.0);
        }
        Ok(Self { names, weights })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub(crate) fn ensure_covers(&self, mapping: &CategoryMapping) -> Result<()> {
        if self.len() < mapping.n_super() {
            return Err(Error::PreferenceLength { got: self.len(), needed: mapping.n_super() });
        }
        Ok(())
    }
}

/// Many-to-one map from detailed category ids to super-category indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMapping {
    super_names: Vec<String>,
    entries: BTreeMap<u32, usize>,
    catch_all: Option<usize>,
}

impl CategoryMapping {
    pub fn new(super_names: Vec<String>, entries: BTreeMap<u32, usize>, catch_all: Option<usize>) -> Result<Self> {
        let n_super = super_names.len();
        if n_super > CHANNEL_CAP {
            return Err(Error::TooManySuperCategories { got: n_super, cap: CHANNEL_CAP });
        }
        if let Some(&index) = entries.values().chain(catch_all.iter()).find(|&&i| i >= n_super) {
            return Err(Error::SuperIndexOutOfRange { index, n_super });
        }
        Ok(Self { super_names, entries, catch_all })
    }

    pub fn super_names(&self) -> &[String] {
        &self.super_names
    }

    pub fn n_super(&self) -> usize {
        self.super_names.len()
    }

    pub fn entries(&self) -> &BTreeMap<u32, usize> {
        &self.entries
    }

    pub fn catch_all(&self) -> Option<usize> {
        self.catch_all
    }

    /// Super-category index for a detailed category id.
    pub fn lookup(&self, category_id: u32) -> Result<usize> {
        self.entries
            .get(&category_id)
            .copied()
            .or(self.catch_all)
            .ok_or(Error::UnmappedCategory(category_id))
    }
}

/// Axis-aligned box in source-image pixels: top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    /// Intersection over union; zero when either box is empty.
    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    fn clamp_to(self, image_w: f64, image_h: f64) -> Self {
        let x0 = self.x.clamp(0.0, image_w);
        let y0 = self.y.clamp(0.0, image_h);
        let x1 = (self.x + self.w.max(0.0)).clamp(0.0, image_w);
        let y1 = (self.y + self.h.max(0.0)).clamp(0.0, image_h);
        Self { x: x0, y: y0, w: x1 - x0, h: y1 - y0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub category_id: u32,
    pub confidence: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn new(category_id: u32, confidence: f64, bbox: BBox) -> Self {
        Self { category_id, confidence, bbox }
    }
}

/// Detections for one image. Boxes are clamped to the image on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    image_w: u32,
    image_h: u32,
    detections: Vec<Detection>,
    timestamp: Option<i64>,
}

impl DetectionSet {
    pub fn new(image_w: u32, image_h: u32, detections: Vec<Detection>, timestamp: Option<i64>) -> Result<Self> {
        if image_w == 0 || image_h == 0 {
            return Err(Error::ZeroDim { height: image_h as usize, width: image_w as usize });
        }
        let (fw, fh) = (image_w as f64, image_h as f64);
        let mut clamped = Vec::with_capacity(detections.len());
        for d in detections {
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(Error::OutOfRange { what: "detection confidence", value: d.confidence });
            }
            let b = d.bbox;
            if let Some(&v) = [b.x, b.y, b.w, b.h].iter().find(|v| !v.is_finite()) {
                return Err(Error::OutOfRange { what: "box coordinate", value: v });
            }
            clamped.push(Detection { bbox: b.clamp_to(fw, fh), ..d });
        }
        Ok(Self { image_w, image_h, detections: clamped, timestamp })
    }

    pub fn image_w(&self) -> u32 {
        self.image_w
    }

    pub fn image_h(&self) -> u32 {
        self.image_h
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn timestamp(&self) -> Option<i64> {
        self.timestamp
    }

    /// Same image and timestamp with a different detection list. The list
    /// must already come from this set (it is not re-clamped).
    pub(crate) fn with_detections(&self, detections: Vec<Detection>) -> Self {
        Self { detections, ..self.clone() }
    }

    /// Copy with every confidence replaced by 1.0, as used for ground-truth
    /// annotations.
    pub fn as_ground_truth(&self) -> Self {
        let detections = self.detections.iter().map(|d| Detection { confidence: 1.0, ..*d }).collect();
        self.with_detections(detections)
    }
}

/// Per-super-category confidence sums over the sets inside the recency
/// window, before max-normalization.
pub fn preference_sums(
    history: &[DetectionSet],
    mapping: &CategoryMapping,
    now: i64,
    window_days: u32,
) -> Result<Vec<f64>> {
    if window_days == 0 {
        return Err(Error::OutOfRange { what: "window_days", value: 0.0 });
    }
    let oldest = now - window_days as i64 * SECONDS_PER_DAY;
    let mut sums = vec![0.0; mapping.n_super()];
    for set in history {
        if let Some(ts) = set.timestamp {
            if ts < oldest || ts > now {
                continue;
            }
        }
        for d in &set.detections {
            sums[mapping.lookup(d.category_id)?] += d.confidence;
        }
    }
    Ok(sums)
}

/// Builds a preference vector from a detection history.
///
/// Sets with a timestamp outside `[now - window_days days, now]` are skipped;
/// sets without a timestamp always count. The result is scaled so that its
/// largest weight is exactly 1, or is all zeros when nothing contributed.
pub fn extract_preferences(
    history: &[DetectionSet],
    mapping: &CategoryMapping,
    now: i64,
    window_days: u32,
) -> Result<PreferenceVector> {
    let sums = preference_sums(history, mapping, now, window_days)?;
    let peak = sums.iter().copied().fold(0.0, f64::max);
    let weights = if peak > 0.0 { sums.iter().map(|s| s / peak).collect() } else { sums };
    PreferenceVector::new(mapping.super_names().to_vec(), weights)
}
