//! Grid sweep for the ground-truth blend weights.
//!
//! Candidates are scored by mean CC plus mean SIM between the generated maps
//! and reference labels. The alpha sweep holds `beta:gamma` fixed; the ratio
//! sweep holds alpha fixed and varies the beta fraction
//! `beta / (beta + gamma)`.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::grid::SaliencyGrid;
use crate::groundtruth::{pmap, psal_from_pmap, AnnotatedImage, GtWeights};
use crate::metrics::{cc, sim};
use crate::preference::{CategoryMapping, PreferenceVector};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepSpec {
    pub alpha_grid: Vec<f64>,
    /// Beta fractions in `[0, 1]`.
    pub ratio_grid: Vec<f64>,
    /// `(beta, gamma)` proportions held fixed during the alpha sweep.
    pub fixed_ratio: (f64, f64),
    pub fixed_alpha: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            alpha_grid: [0.01, 0.02, 0.04, 0.06, 0.08, 0.10, 0.14, 0.20].to_vec(),
            ratio_grid: [0.5, 0.6, 0.7, 0.8, 0.9, 1.0].to_vec(),
            fixed_ratio: (0.8, 0.2),
            fixed_alpha: 0.06,
        }
    }
}

impl SweepSpec {
    pub fn fixed_beta_fraction(&self) -> Result<f64> {
        let (b, g) = self.fixed_ratio;
        if !(b >= 0.0 && g >= 0.0 && b + g > 0.0) {
            return Err(Error::OutOfRange { what: "fixed ratio beta+gamma", value: b + g });
        }
        Ok(b / (b + g))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateScore {
    pub weights: GtWeights,
    pub beta_fraction: f64,
    pub mean_cc: f64,
    pub mean_sim: f64,
    pub objective: f64,
    /// Images scored; images with undefined CC are left out of both means.
    pub images_used: usize,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    pub candidates: Vec<CandidateScore>,
    pub best: Option<GtWeights>,
}

const QUANTUM: f64 = 1e12;

fn quantize(x: f64) -> f64 {
    libm::round(x * QUANTUM) / QUANTUM
}

/// `(alpha, (1 - alpha) * f, (1 - alpha) * (1 - f))` for beta fraction `f`.
///
/// Components are rounded to twelve decimals so decimal grid points give
/// their decimal weights, e.g. `(0.06, 0.8)` gives exactly
/// `(0.06, 0.752, 0.188)`.
pub fn final_weights(alpha: f64, beta_fraction: f64) -> Result<GtWeights> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange { what: "alpha", value: alpha });
    }
    if !(0.0..=1.0).contains(&beta_fraction) {
        return Err(Error::OutOfRange { what: "beta fraction", value: beta_fraction });
    }
    let rest = 1.0 - alpha;
    GtWeights::new(quantize(alpha), quantize(rest * beta_fraction), quantize(rest * (1.0 - beta_fraction)))
}

/// Precomputed per-image inputs shared by every candidate.
struct Prepared<'a> {
    sal: &'a SaliencyGrid,
    pref: SaliencyGrid,
    label: &'a SaliencyGrid,
}

fn prepare<'a>(
    dataset: &'a [AnnotatedImage],
    labels: &'a [SaliencyGrid],
    mapping: &CategoryMapping,
    pvec: &PreferenceVector,
) -> Result<Vec<Prepared<'a>>> {
    if dataset.len() != labels.len() {
        return Err(Error::LabelCount { labels: labels.len(), images: dataset.len() });
    }
    dataset
        .iter()
        .zip(labels)
        .map(|(img, label)| {
            img.sal.ensure_same_dims(label)?;
            let (h, w) = img.sal.dims();
            Ok(Prepared { sal: &img.sal, pref: pmap(&img.boxes, mapping, pvec, h, w)?, label })
        })
        .collect()
}

fn score(prepared: &[Prepared<'_>], weights: GtWeights, beta_fraction: f64) -> CandidateScore {
    let mut sum_cc = 0.0;
    let mut sum_sim = 0.0;
    let mut used = 0usize;
    let mut failed = false;
    for item in prepared {
        let result = psal_from_pmap(item.sal, &item.pref, &weights).and_then(|g| {
            let c = cc(&g.value, item.label);
            let s = sim(&g.value, item.label)?;
            Ok((c, s))
        });
        match result {
            Ok((Ok(c), s)) => {
                sum_cc += c;
                sum_sim += s;
                used += 1;
            }
            Ok((Err(Error::ZeroVariance), _)) => {}
            Ok((Err(_), _)) | Err(_) => failed = true,
        }
    }
    let (mean_cc, mean_sim) = if used > 0 { (sum_cc / used as f64, sum_sim / used as f64) } else { (f64::NAN, f64::NAN) };
    let failed = failed || used == 0;
    let objective = if failed { f64::NEG_INFINITY } else { mean_cc + mean_sim };
    CandidateScore { weights, beta_fraction, mean_cc, mean_sim, objective, images_used: used, failed }
}

/// Higher objective wins; ties go to the smaller alpha, then the larger beta.
fn better(a: &CandidateScore, b: &CandidateScore) -> Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then_with(|| b.weights.alpha.total_cmp(&a.weights.alpha))
        .then_with(|| a.weights.beta.total_cmp(&b.weights.beta))
}

fn pick_best(candidates: &[CandidateScore]) -> Option<GtWeights> {
    candidates.iter().filter(|c| !c.failed).max_by(|a, b| better(a, b)).map(|c| c.weights)
}

fn check_grid(grid: &[f64], what: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyList);
    }
    if let Some(&v) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfRange { what, value: v });
    }
    Ok(())
}

/// Scores arbitrary `(alpha, beta_fraction)` candidates.
pub fn sweep_candidates(
    dataset: &[AnnotatedImage],
    labels: &[SaliencyGrid],
    mapping: &CategoryMapping,
    pvec: &PreferenceVector,
    candidates: &[(f64, f64)],
) -> Result<SweepResult> {
    let prepared = prepare(dataset, labels, mapping, pvec)?;
    let mut scored = Vec::with_capacity(candidates.len());
    for &(alpha, frac) in candidates {
        scored.push(score(&prepared, final_weights(alpha, frac)?, frac));
    }
    let best = pick_best(&scored);
    Ok(SweepResult { candidates: scored, best })
}

/// Varies alpha over `spec.alpha_grid` with `beta:gamma = spec.fixed_ratio`.
pub fn sweep_alpha(
    dataset: &[AnnotatedImage],
    labels: &[SaliencyGrid],
    mapping: &CategoryMapping,
    pvec: &PreferenceVector,
    spec: &SweepSpec,
) -> Result<SweepResult> {
    check_grid(&spec.alpha_grid, "alpha")?;
    let frac = spec.fixed_beta_fraction()?;
    let candidates: Vec<_> = spec.alpha_grid.iter().map(|&a| (a, frac)).collect();
    sweep_candidates(dataset, labels, mapping, pvec, &candidates)
}

/// Varies the beta fraction over `spec.ratio_grid` with alpha fixed to
/// `spec.fixed_alpha`.
pub fn sweep_ratio(
    dataset: &[AnnotatedImage],
    labels: &[SaliencyGrid],
    mapping: &CategoryMapping,
    pvec: &PreferenceVector,
    spec: &SweepSpec,
) -> Result<SweepResult> {
    check_grid(&spec.ratio_grid, "beta fraction")?;
    let candidates: Vec<_> = spec.ratio_grid.iter().map(|&f| (spec.fixed_alpha, f)).collect();
    sweep_candidates(dataset, labels, mapping, pvec, &candidates)
}
