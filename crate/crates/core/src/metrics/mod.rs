//! Saliency map comparison metrics.
//!
//! Throughout, `p` is the predicted map and `q` the ground truth. Logarithms
//! are natural.

pub mod emd;
mod report;

pub use emd::{emd, EmdConfig, Flow, FlowPlan, GroundDistance};
pub use report::{evaluate_batch, score_pair, MetricCounts, MetricMeans, MetricReport, PairScores};

use crate::error::{Error, Result};
use crate::grid::SaliencyGrid;

/// Regularization constant of the KL-Judd variant.
pub const KL_EPSILON: f64 = 2.2204e-16;

/// Allowed deviation of a pixel sum from one for metrics that need
/// distributions.
pub const DISTRIBUTION_TOL: f64 = 1e-6;

/// Pearson correlation using population covariance and standard deviations.
pub fn cc(p: &SaliencyGrid, q: &SaliencyGrid) -> Result<f64> {
    p.ensure_same_dims(q)?;
    let n = p.len() as f64;
    let mp = p.sum() / n;
    let mq = q.sum() / n;
    let (mut cov, mut vp, mut vq) = (0.0, 0.0, 0.0);
    for (&a, &b) in p.values().iter().zip(q.values()) {
        let (da, db) = (a - mp, b - mq);
        cov += da * db;
        vp += da * da;
        vq += db * db;
    }
    if vp <= 0.0 || vq <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((cov / libm::sqrt(vp * vq)).clamp(-1.0, 1.0))
}

/// Histogram intersection of two distributions.
pub fn sim(p: &SaliencyGrid, q: &SaliencyGrid) -> Result<f64> {
    p.ensure_same_dims(q)?;
    p.ensure_distribution(DISTRIBUTION_TOL)?;
    q.ensure_distribution(DISTRIBUTION_TOL)?;
    Ok(p.values().iter().zip(q.values()).map(|(a, b)| a.min(*b)).sum())
}

/// `sum_i q_i log(eps + q_i / (eps + p_i))`. Heavily penalizes cells where the
/// ground truth has mass the prediction lacks.
pub fn kld_judd(p: &SaliencyGrid, q: &SaliencyGrid) -> Result<f64> {
    p.ensure_same_dims(q)?;
    p.ensure_distribution(DISTRIBUTION_TOL)?;
    q.ensure_distribution(DISTRIBUTION_TOL)?;
    Ok(p
        .values()
        .iter()
        .zip(q.values())
        .map(|(&pi, &qi)| qi * libm::log(KL_EPSILON + qi / (KL_EPSILON + pi)))
        .sum())
}

/// `sum_i p_i log(p_i / q_i)` with `0 log 0 = 0`.
pub fn kld_plain(p: &SaliencyGrid, q: &SaliencyGrid) -> Result<f64> {
    p.ensure_same_dims(q)?;
    p.ensure_distribution(DISTRIBUTION_TOL)?;
    q.ensure_distribution(DISTRIBUTION_TOL)?;
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.values().iter().zip(q.values()).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::UndefinedRatio { index });
        }
        total += pi * libm::log(pi / qi);
    }
    Ok(total)
}
