//! Seeded synthetic datasets: random object layouts plus smooth fixation maps
//! built from Gaussian blobs around a center bias. Used for desk-scale weight
//! sweeps and for exercising the pipelines without collected labels.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::SaliencyGrid;
use crate::groundtruth::AnnotatedImage;
use crate::preference::{BBox, CategoryMapping, Detection, DetectionSet, PreferenceVector};

/// Detailed category id of the preferred class in the synthetic mapping.
pub const PERSON_ID: u32 = 1;
/// Detailed ids `2..=NON_HUMAN_MAX` fall into the catch-all super category.
pub const NON_HUMAN_MAX: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub images: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub image_w: u32,
    pub image_h: u32,
    /// Objects per image, inclusive range.
    pub min_objects: usize,
    pub max_objects: usize,
    /// Keep preferred-class boxes out of the central region of the image.
    pub offcenter_preferred: bool,
    /// Blobs added at random positions on top of the center bias.
    pub random_blobs: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            images: 100,
            grid_h: 38,
            grid_w: 38,
            image_w: 300,
            image_h: 300,
            min_objects: 2,
            max_objects: 5,
            offcenter_preferred: false,
            random_blobs: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub images: Vec<AnnotatedImage>,
    pub mapping: CategoryMapping,
    pub pvec: PreferenceVector,
}

/// `person -> 0`, everything else `-> 1 (non-human)`.
pub fn person_mapping() -> CategoryMapping {
    let names: Vec<String> = ["person", "non-human"].iter().map(|s| String::from(*s)).collect();
    let entries: BTreeMap<u32, usize> = [(PERSON_ID, 0)].into_iter().collect();
    CategoryMapping::new(names, entries, Some(1)).expect("static mapping is valid")
}

/// `[person, non-human] = [1.0, 0.05]`.
pub fn person_biased_pvec() -> PreferenceVector {
    let m = person_mapping();
    PreferenceVector::new(m.super_names().to_vec(), [1.0, 0.05].to_vec()).expect("static vector is valid")
}

pub fn synth_dataset(cfg: &SynthConfig, seed: u64) -> SynthDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (0..cfg.images).map(|_| synth_image(cfg, &mut rng)).collect();
    SynthDataset { images, mapping: person_mapping(), pvec: person_biased_pvec() }
}

fn synth_image(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> AnnotatedImage {
    let (iw, ih) = (cfg.image_w as f64, cfg.image_h as f64);
    let n_objects = rng.random_range(cfg.min_objects..=cfg.max_objects.max(cfg.min_objects));
    let mut dets = Vec::with_capacity(n_objects);
    for k in 0..n_objects {
        // the first object is always the preferred class
        let category_id = if k == 0 || rng.random_bool(0.3) { PERSON_ID } else { rng.random_range(2..=NON_HUMAN_MAX) };
        let w = rng.random_range(0.12..0.3) * iw;
        let h = rng.random_range(0.12..0.3) * ih;
        let (x, y) = if category_id == PERSON_ID && cfg.offcenter_preferred {
            offcenter_corner(rng, iw, ih, w, h)
        } else {
            (rng.random_range(0.0..iw - w), rng.random_range(0.0..ih - h))
        };
        dets.push(Detection::new(category_id, 1.0, BBox::new(x, y, w, h)));
    }
    let boxes = DetectionSet::new(cfg.image_w, cfg.image_h, dets, None).expect("boxes are inside the image");

    // fixation map: center bias, a blob on some objects, a few random blobs
    let (gh, gw) = (cfg.grid_h as f64, cfg.grid_w as f64);
    let mut blobs: Vec<(f64, f64, f64, f64)> = Vec::new();
    blobs.push((gh / 2.0, gw / 2.0, gh / 4.0, 1.0));
    for d in boxes.detections() {
        if rng.random_bool(0.5) {
            let cy = (d.bbox.y + d.bbox.h / 2.0) / ih * gh;
            let cx = (d.bbox.x + d.bbox.w / 2.0) / iw * gw;
            blobs.push((cy, cx, gh / 12.0, rng.random_range(0.3..1.0)));
        }
    }
    for _ in 0..cfg.random_blobs {
        blobs.push((rng.random_range(0.0..gh), rng.random_range(0.0..gw), gh / 10.0, rng.random_range(0.2..0.8)));
    }
    let sal = SaliencyGrid::from_fn(cfg.grid_h, cfg.grid_w, |r, c| {
        let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
        blobs
            .iter()
            .map(|&(cy, cx, s, a)| a * libm::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (2.0 * s * s)))
            .sum()
    })
    .expect("blob sums are finite and positive")
    .sum_normalize()
    .expect("blob sums are positive");

    AnnotatedImage::new(sal, boxes)
}

/// A box position hugging one of the four image corners.
fn offcenter_corner(rng: &mut ChaCha8Rng, iw: f64, ih: f64, w: f64, h: f64) -> (f64, f64) {
    let margin_x = rng.random_range(0.0..0.05) * iw;
    let margin_y = rng.random_range(0.0..0.05) * ih;
    let x = if rng.random_bool(0.5) { margin_x } else { iw - w - margin_x };
    let y = if rng.random_bool(0.5) { margin_y } else { ih - h - margin_y };
    (x, y)
}
