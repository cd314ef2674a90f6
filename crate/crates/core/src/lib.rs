//! Pure algorithms for personalized saliency work: preference profiling from
//! detections, the detection-tensor and preference-mapping math, dynamic
//! personalized ground-truth synthesis, center priors, the two comparison
//! baselines, the CC / SIM / KL / EMD metric suite and the ground-truth weight
//! sweep.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, JSON manifests
//! and the command-line front end live in the `persal` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod error;
pub mod grid;
pub mod groundtruth;
pub mod metrics;
pub mod preference;
pub mod raster;
pub mod synth;
pub mod tuning;

pub use error::{Error, Result};
pub use grid::{GridStats, GridWarning, SaliencyGrid, Warned};
pub use groundtruth::{AnnotatedImage, GtWeights};
pub use preference::{BBox, CategoryMapping, Detection, DetectionSet, PreferenceVector};
pub use raster::{ClassTensor, NmsConfig};

/// Fixed channel count of the preference-mapping output.
pub const CHANNEL_CAP: usize = 20;

/// Default prediction / generation resolution (rows, columns).
pub const DEFAULT_GRID: (usize, usize) = (38, 38);
