//! Nonparametric bootstrap bands: subjects are resampled with replacement,
//! the full configured pipeline is re-run on each resample, and pointwise
//! percentile intervals are read off the replicate curves.

use rand::Rng;
use rayon::prelude::*;

use crate::crossfit::{crossfit_curves, EstimationSettings};
use crate::data::{SurvivalDataset, TimeGrid};
use crate::error::{Error, Result};
use crate::estimators::{EstimateCurve, EstimatorKind};
use crate::nuisance::RoleFeatures;
use crate::rng::{derive_seed, stream};

pub const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub b: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            b: 500,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b < 2 {
            return Err(Error::InvalidConfig(format!(
                "bootstrap needs B >= 2, got {}",
                self.b
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Inverse of the empirical CDF: the smallest order statistic whose rank
/// reaches `p * m`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    let rank = (p * m as f64).ceil() as usize;
    sorted[rank.clamp(1, m) - 1]
}

/// Pointwise `[alpha/2, 1 - alpha/2]` bands from replicate curves.
pub fn percentile_bands(replicates: &[Vec<f64>], alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let tau = replicates.first().map_or(0, Vec::len);
    let mut lo = Vec::with_capacity(tau);
    let mut hi = Vec::with_capacity(tau);
    let mut col = Vec::with_capacity(replicates.len());
    for t in 0..tau {
        col.clear();
        col.extend(replicates.iter().map(|r| r[t]));
        col.sort_by(f64::total_cmp);
        lo.push(percentile(&col, alpha / 2.0));
        hi.push(percentile(&col, 1.0 - alpha / 2.0));
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub curve: EstimateCurve,
    pub replicates: Vec<Vec<f64>>,
    pub failed: usize,
}

fn one_resample(
    data: &SurvivalDataset,
    roles: &RoleFeatures,
    kind: EstimatorKind,
    grid: &TimeGrid,
    settings: &EstimationSettings,
    boot: &BootstrapConfig,
    b: usize,
) -> Option<Vec<f64>> {
    let n = data.len();
    for attempt in 0..=MAX_REDRAWS {
        let mut rng = stream(boot.seed, &[0xB007, b as u64, attempt as u64]);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let resample = data.select(&idx);
        if resample.clone().validate().is_err() {
            continue;
        }
        let mut s = settings.clone();
        s.seed = derive_seed(settings.seed, &[0xB007, b as u64, attempt as u64]);
        let out = crossfit_curves(&resample, &roles.select(&idx), &[kind], grid, &s)
            .pop()
            .expect("one result per kind");
        match out {
            Ok(c) if !c.weak_instrument && c.psi.iter().all(|v| v.is_finite()) => {
                return Some(c.psi)
            }
            _ => continue,
        }
    }
    None
}

/// Point estimate on the original sample plus percentile bands from `B`
/// resamples. Resamples whose pipeline fails are redrawn up to
/// [`MAX_REDRAWS`] times; more than 10% failures is an error.
pub fn bootstrap_curve(
    data: &SurvivalDataset,
    roles: &RoleFeatures,
    kind: EstimatorKind,
    grid: &TimeGrid,
    settings: &EstimationSettings,
    boot: &BootstrapConfig,
) -> Result<BootstrapResult> {
    boot.validate()?;
    let mut curve = crossfit_curves(data, roles, &[kind], grid, settings)
        .pop()
        .expect("one result per kind")?;
    let draws: Vec<Option<Vec<f64>>> = (0..boot.b)
        .into_par_iter()
        .map(|b| one_resample(data, roles, kind, grid, settings, boot, b))
        .collect();
    let failed = draws.iter().filter(|d| d.is_none()).count();
    if failed * 10 > boot.b {
        return Err(Error::BootstrapUnstable {
            failed,
            total: boot.b,
        });
    }
    let replicates: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    let (lo, hi) = percentile_bands(&replicates, boot.alpha);
    curve.ci_lo = Some(lo);
    curve.ci_hi = Some(hi);
    Ok(BootstrapResult {
        curve,
        replicates,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_replicates_give_min_and_max() {
        let reps = vec![vec![0.3, -1.0], vec![0.1, 2.0]];
        let (lo, hi) = percentile_bands(&reps, 0.05);
        assert_eq!(lo, vec![0.1, -1.0]);
        assert_eq!(hi, vec![0.3, 2.0]);
    }

    #[test]
    fn type_one_quantile() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&s, 0.25), 1.0);
        assert_eq!(percentile(&s, 0.26), 2.0);
        assert_eq!(percentile(&s, 1.0), 4.0);
        assert_eq!(percentile(&s, 0.0), 1.0);
    }

    #[test]
    fn config_checks() {
        assert!(BootstrapConfig {
            b: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BootstrapConfig {
            alpha: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BootstrapConfig::default().validate().is_ok());
    }
}
