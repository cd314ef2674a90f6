use alloc::vec::Vec;

use super::{cc, emd, kld_judd, kld_plain, sim, EmdConfig};
use crate::error::{Error, Result};
use crate::grid::SaliencyGrid;

/// All metrics for one (prediction, ground truth) pair. Failures are kept per
/// metric so one bad value never hides the others.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScores {
    pub cc: Result<f64>,
    pub sim: Result<f64>,
    pub kld_judd: Result<f64>,
    pub kld_plain: Result<f64>,
    pub emd: Result<f64>,
}

impl PairScores {
    pub fn is_clean(&self) -> bool {
        self.cc.is_ok() && self.sim.is_ok() && self.kld_judd.is_ok() && self.kld_plain.is_ok() && self.emd.is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricMeans {
    pub cc: Option<f64>,
    pub sim: Option<f64>,
    pub kld_judd: Option<f64>,
    pub kld_plain: Option<f64>,
    pub emd: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricCounts {
    pub images: usize,
    /// Images whose CC is undefined because a map is constant.
    pub cc_excluded: usize,
    pub cc_failed: usize,
    pub sim_failed: usize,
    pub kld_judd_failed: usize,
    pub kld_plain_failed: usize,
    pub emd_failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_image: Vec<PairScores>,
    pub means: MetricMeans,
    pub counts: MetricCounts,
}

pub fn score_pair(p: &SaliencyGrid, q: &SaliencyGrid, emd_cfg: &EmdConfig) -> PairScores {
    PairScores {
        cc: cc(p, q),
        sim: sim(p, q),
        kld_judd: kld_judd(p, q),
        kld_plain: kld_plain(p, q),
        emd: emd(p, q, emd_cfg).map(|(d, _)| d),
    }
}

fn mean_of<'a>(values: impl Iterator<Item = &'a Result<f64>>) -> (Option<f64>, usize) {
    let (mut sum, mut n, mut failed) = (0.0, 0usize, 0usize);
    for v in values {
        match v {
            Ok(x) => {
                sum += x;
                n += 1;
            }
            Err(_) => failed += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), failed)
}

impl MetricReport {
    pub fn from_scores(per_image: Vec<PairScores>) -> Self {
        let (cc, cc_bad) = mean_of(per_image.iter().map(|s| &s.cc));
        let cc_excluded = per_image.iter().filter(|s| s.cc == Err(Error::ZeroVariance)).count();
        let (sim, sim_failed) = mean_of(per_image.iter().map(|s| &s.sim));
        let (kld_judd, kld_judd_failed) = mean_of(per_image.iter().map(|s| &s.kld_judd));
        let (kld_plain, kld_plain_failed) = mean_of(per_image.iter().map(|s| &s.kld_plain));
        let (emd, emd_failed) = mean_of(per_image.iter().map(|s| &s.emd));
        let counts = MetricCounts {
            images: per_image.len(),
            cc_excluded,
            cc_failed: cc_bad - cc_excluded,
            sim_failed,
            kld_judd_failed,
            kld_plain_failed,
            emd_failed,
        };
        Self { means: MetricMeans { cc, sim, kld_judd, kld_plain, emd }, counts, per_image }
    }
}

/// Scores every pair and aggregates means. Per-pair errors are recorded, never
/// propagated.
pub fn evaluate_batch<'a>(
    pairs: impl IntoIterator<Item = (&'a SaliencyGrid, &'a SaliencyGrid)>,
    emd_cfg: &EmdConfig,
) -> MetricReport {
    MetricReport::from_scores(pairs.into_iter().map(|(p, q)| score_pair(p, q, emd_cfg)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identical_pair() {
        let p = SaliencyGrid::from_fn(4, 4, |r, c| (r + 2 * c + 1) as f64).unwrap().sum_normalize().unwrap();
        let report = evaluate_batch([(&p, &p)], &EmdConfig::default());
        let m = report.means;
        assert!((m.cc.unwrap() - 1.0).abs() < 1e-12);
        assert!((m.sim.unwrap() - 1.0).abs() < 1e-12);
        assert!(m.kld_judd.unwrap().abs() < 1e-12);
        assert_eq!(m.kld_plain, Some(0.0));
        assert_eq!(m.emd, Some(0.0));
    }

    #[test]
    fn means_are_arithmetic_and_failures_recorded() {
        let a = SaliencyGrid::new(1, 2, vec![0.25, 0.75]).unwrap();
        let b = SaliencyGrid::new(1, 2, vec![0.75, 0.25]).unwrap();
        let flat = SaliencyGrid::new(1, 2, vec![0.5, 0.5]).unwrap();
        let wide = SaliencyGrid::new(1, 3, vec![0.2, 0.3, 0.5]).unwrap();
        let cfg = EmdConfig::default();
        let report = evaluate_batch([(&a, &b), (&a, &a), (&flat, &a), (&wide, &a)], &cfg);

        let s0 = score_pair(&a, &b, &cfg);
        let s1 = score_pair(&a, &a, &cfg);
        let s2 = score_pair(&flat, &a, &cfg);
        let sim_mean = (s0.sim.clone().unwrap() + s1.sim.clone().unwrap() + s2.sim.clone().unwrap()) / 3.0;
        assert!((report.means.sim.unwrap() - sim_mean).abs() < 1e-15);
        let cc_mean = (s0.cc.unwrap() + s1.cc.unwrap()) / 2.0;
        assert!((report.means.cc.unwrap() - cc_mean).abs() < 1e-15);

        assert_eq!(report.counts.images, 4);
        assert_eq!(report.counts.cc_excluded, 1);
        assert_eq!(report.counts.cc_failed, 1);
        assert_eq!(report.counts.emd_failed, 1);
        assert!(!report.per_image[3].is_clean());
    }
}
