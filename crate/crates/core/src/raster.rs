//! Post-detection tensor math: non-maximum suppression, rasterizing kept
//! detections into a per-class confidence tensor, and the preference-weighted
//! mapping from detailed classes onto super-category channels.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::grid::SaliencyGrid;
use crate::preference::{BBox, CategoryMapping, DetectionSet, PreferenceVector};
use crate::CHANNEL_CAP;

pub const VOC_CONFIDENCE: f64 = 0.6;
pub const COCO_CONFIDENCE: f64 = 0.5;
pub const DEFAULT_IOU: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NmsConfig {
    pub confidence_threshold: f64,
    pub iou_threshold: f64,
}

impl NmsConfig {
    pub fn new(confidence_threshold: f64, iou_threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence_threshold) {
            return Err(Error::OutOfRange { what: "confidence_threshold", value: confidence_threshold });
        }
        if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
            return Err(Error::OutOfRange { what: "iou_threshold", value: iou_threshold });
        }
        Ok(Self { confidence_threshold, iou_threshold })
    }

    pub fn voc() -> Self {
        Self { confidence_threshold: VOC_CONFIDENCE, iou_threshold: DEFAULT_IOU }
    }

    pub fn coco() -> Self {
        Self { confidence_threshold: COCO_CONFIDENCE, iou_threshold: DEFAULT_IOU }
    }
}

impl Default for NmsConfig {
    fn default() -> Self {
        Self::coco()
    }
}

/// Drops detections below the confidence threshold, then greedily keeps the
/// most confident box of each class and suppresses same-class boxes whose IoU
/// with a kept box exceeds the IoU threshold. Output is in descending
/// confidence order (ties keep input order).
pub fn nms(dets: &DetectionSet, cfg: &NmsConfig) -> DetectionSet {
    let mut order: Vec<_> =
        dets.detections().iter().filter(|d| d.confidence >= cfg.confidence_threshold).copied().collect();
    order.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));

    let mut kept: Vec<crate::preference::Detection> = Vec::with_capacity(order.len());
    for cand in order {
        let suppressed = kept
            .iter()
            .any(|k| k.category_id == cand.category_id && k.bbox.iou(&cand.bbox) > cfg.iou_threshold);
        if !suppressed {
            kept.push(cand);
        }
    }
    dets.with_detections(kept)
}

/// Grid cells covered by a box given in image pixels.
///
/// The box is scaled by `grid / image` on each axis; a cell `[c, c + 1)` is
/// covered when it overlaps the scaled box with positive length on both axes.
pub fn covered_cells(
    bbox: &BBox,
    image_w: u32,
    image_h: u32,
    grid_h: usize,
    grid_w: usize,
) -> Option<(Range<usize>, Range<usize>)> {
    let cols = axis_cells(bbox.x, bbox.w, image_w, grid_w)?;
    let rows = axis_cells(bbox.y, bbox.h, image_h, grid_h)?;
    Some((rows, cols))
}

fn axis_cells(start: f64, len: f64, image: u32, cells: usize) -> Option<Range<usize>> {
    if !(len > 0.0) {
        return None;
    }
    // multiply before dividing so integral pixel edges land on exact cell edges
    let lo = start * cells as f64 / image as f64;
    let hi = (start + len) * cells as f64 / image as f64;
    let first = (libm::floor(lo).max(0.0) as usize).min(cells);
    let last = (libm::ceil(hi).max(0.0) as usize).min(cells);
    (first < last).then_some(first..last)
}

/// Stack of per-class confidence grids, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTensor {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl ClassTensor {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ZeroDim { height, width });
        }
        Ok(Self { height, width, channels, values: vec![0.0; height * width * channels] })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_channels(&self) -> usize {
        self.channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.values[c * n..(c + 1) * n]
    }

    fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, row: usize, col: usize) -> f64 {
        self.channel(c)[row * self.width + col]
    }

    pub fn channel_grid(&self, c: usize) -> SaliencyGrid {
        SaliencyGrid::from_parts(self.height, self.width, self.channel(c).to_vec(), false)
    }
}

/// Paints each detection's confidence into its class channel, keeping the
/// maximum where boxes overlap.
pub fn rasterize(dets: &DetectionSet, grid_h: usize, grid_w: usize, n_classes: usize) -> Result<ClassTensor> {
    let mut t = ClassTensor::zeros(grid_h, grid_w, n_classes)?;
    for d in dets.detections() {
        let class = d.category_id as usize;
        if class >= n_classes {
            return Err(Error::CategoryOutOfRange { id: d.category_id, n_classes });
        }
        let Some((rows, cols)) = covered_cells(&d.bbox, dets.image_w(), dets.image_h(), grid_h, grid_w) else {
            continue;
        };
        let plane = t.channel_mut(class);
        for r in rows {
            for c in cols.clone() {
                let cell = &mut plane[r * grid_w + c];
                *cell = cell.max(d.confidence);
            }
        }
    }
    Ok(t)
}

/// Merges detailed-class channels into [`CHANNEL_CAP`] super-category
/// channels: each output channel is the element-wise max over its member
/// channels times that super category's preference weight. Channels with no
/// members stay zero.
pub fn map_to_super(t: &ClassTensor, mapping: &CategoryMapping, pvec: &PreferenceVector) -> Result<ClassTensor> {
    pvec.ensure_covers(mapping)?;
    if pvec.len() > CHANNEL_CAP {
        return Err(Error::TooManySuperCategories { got: pvec.len(), cap: CHANNEL_CAP });
    }
    if let Some(&channel) = mapping.entries().keys().find(|&&id| id as usize >= t.n_channels()) {
        return Err(Error::ChannelMismatch { channel: channel as usize, n_channels: t.n_channels() });
    }

    let mut out = ClassTensor::zeros(t.height, t.width, CHANNEL_CAP)?;
    for detailed in 0..t.n_channels() {
        let Ok(sup) = mapping.lookup(detailed as u32) else {
            continue;
        };
        let weight = pvec.weight(sup);
        let src = t.channel(detailed);
        for (dst, &v) in out.channel_mut(sup).iter_mut().zip(src) {
            *dst = dst.max(v * weight);
        }
    }
    Ok(out)
}

/// Per-cell maximum over all channels.
pub fn preference_map(t_super: &ClassTensor) -> SaliencyGrid {
    let n = t_super.height * t_super.width;
    let mut values = vec![0.0f64; n];
    for c in 0..t_super.channels {
        for (dst, &v) in values.iter_mut().zip(t_super.channel(c)) {
            *dst = dst.max(v);
        }
    }
    SaliencyGrid::from_parts(t_super.height, t_super.width, values, false)
}
