//! Sample splitting: nuisances are fit on the complement of each fold and
//! the estimator is evaluated on the fold; the fold curves are averaged.
//!
//! Several estimators can be evaluated from one set of nuisance fits, which
//! is how the simulation studies compare them on identical splits.

use rand::seq::SliceRandom;

use crate::data::{IvKind, SurvivalDataset, TimeGrid};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_if_binary, estimate_if_continuous, estimate_if_hazard, estimate_ipw,
    estimate_ipw_continuous, estimate_naive_hazard, estimate_plugin, estimate_plugin_continuous,
    Diagnostics, EstimateCurve, EstimatorKind, DEFAULT_DENOM_FLOOR,
};
use crate::learners::LearnerConfig;
use crate::nuisance::{
    fit_hazard_set, fit_nuisance_set, fit_shift_nuisance_set, FitInput, RoleFeatures, Strata,
};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.fold_of {
            s[f] += 1;
        }
        s
    }
}

/// Uniformly random balanced partition of `0..n` into `k` folds.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, &[0xF01D]));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    Ok(FoldAssignment {
        n,
        k,
        seed,
        fold_of,
    })
}

/// Everything besides the data needed to produce a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationSettings {
    /// Number of folds; 1 fits and evaluates on the full sample.
    pub folds: usize,
    pub learner: LearnerConfig,
    pub denom_floor: f64,
    pub seed: u64,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            folds: 10,
            learner: LearnerConfig::default(),
            denom_floor: DEFAULT_DENOM_FLOOR,
            seed: 0,
        }
    }
}

/// Fits the nuisances each requested estimator needs (once per group) on
/// `input.train` and evaluates every estimator on `input.eval`.
pub fn fit_and_estimate(
    input: FitInput<'_>,
    kinds: &[EstimatorKind],
    grid: &TimeGrid,
    z_range: (f64, f64),
    settings: &EstimationSettings,
    seed: u64,
) -> Vec<Result<EstimateCurve>> {
    let tau = grid.tau();
    let cfg = &settings.learner;
    let floor = settings.denom_floor;
    let mut binary = None;
    let mut naive = None;
    let mut ifh = None;
    let mut shift: Vec<(u64, Result<_>)> = Vec::new();
    kinds
        .iter()
        .map(|kind| {
            kind.check_compatible(input.eval.iv_kind)?;
            match *kind {
                EstimatorKind::IfBinary | EstimatorKind::Ipw | EstimatorKind::PlugIn => {
                    let nu = binary
                        .get_or_insert_with(|| fit_nuisance_set(input, tau, cfg, seed))
                        .as_ref()
                        .map_err(Clone::clone)?;
                    match kind {
                        EstimatorKind::IfBinary => estimate_if_binary(input.eval, nu, grid, floor),
                        EstimatorKind::Ipw => estimate_ipw(input.eval, nu, grid, floor),
                        _ => estimate_plugin(input.eval, nu, grid, floor),
                    }
                }
                EstimatorKind::NaiveHazard => {
                    let hz = naive
                        .get_or_insert_with(|| {
                            fit_hazard_set(input, tau, Strata::Treatment, cfg, seed)
                        })
                        .as_ref()
                        .map_err(Clone::clone)?;
                    estimate_naive_hazard(input.eval, hz, grid, cfg.trunc_eps)
                }
                EstimatorKind::IfHazard => {
                    let hz = ifh
                        .get_or_insert_with(|| {
                            fit_hazard_set(input, tau, Strata::InstrumentTreatment, cfg, seed)
                        })
                        .as_ref()
                        .map_err(Clone::clone)?;
                    estimate_if_hazard(input.eval, hz, grid, cfg.trunc_eps, floor)
                }
                EstimatorKind::IfContinuous { kappa }
                | EstimatorKind::IpwContinuous { kappa }
                | EstimatorKind::PlugInContinuous { kappa } => {
                    let key = kappa.to_bits();
                    let pos = match shift.iter().position(|(k, _)| *k == key) {
                        Some(p) => p,
                        None => {
                            let fit = fit_shift_nuisance_set(input, tau, kappa, z_range, cfg, seed);
                            shift.push((key, fit));
                            shift.len() - 1
                        }
                    };
                    let nu = shift[pos].1.as_ref().map_err(Clone::clone)?;
                    match kind {
                        EstimatorKind::IfContinuous { .. } => {
                            estimate_if_continuous(input.eval, nu, grid, floor)
                        }
                        EstimatorKind::IpwContinuous { .. } => {
                            estimate_ipw_continuous(input.eval, nu, grid, floor)
                        }
                        _ => estimate_plugin_continuous(input.eval, nu, grid, floor),
                    }
                }
            }
        })
        .collect()
}

/// Averages per-fold curves; the fold curves and denominators are kept in
/// the diagnostics.
pub fn average_folds(grid: &TimeGrid, folds: Vec<EstimateCurve>) -> EstimateCurve {
    let k = folds.len() as f64;
    let mut psi = vec![0.0; grid.len()];
    let mut diag = Diagnostics::default();
    let mut den = 0.0;
    let mut weak = false;
    for f in &folds {
        for (acc, v) in psi.iter_mut().zip(&f.psi) {
            *acc += v / k;
        }
        den += f.denominator / k;
        weak |= f.weak_instrument;
        diag.fold_psi.push(f.psi.clone());
        diag.fold_denominators.push(f.denominator);
        diag.fold_weak.push(f.weak_instrument);
        diag.positivity_warning |= f.diagnostics.positivity_warning;
        diag.boundary_subjects += f.diagnostics.boundary_subjects;
        if let Some(g) = f.diagnostics.min_cens_surv {
            diag.min_cens_surv = Some(diag.min_cens_surv.map_or(g, |m: f64| m.min(g)));
        }
    }
    EstimateCurve {
        grid: grid.clone(),
        psi,
        ci_lo: None,
        ci_hi: None,
        denominator: den,
        weak_instrument: weak,
        diagnostics: diag,
    }
}

/// Cross-fit (or full-sample when `settings.folds == 1`) curves for every
/// requested estimator, sharing nuisance fits.
pub fn crossfit_curves(
    data: &SurvivalDataset,
    roles: &RoleFeatures,
    kinds: &[EstimatorKind],
    grid: &TimeGrid,
    settings: &EstimationSettings,
) -> Vec<Result<EstimateCurve>> {
    let z_range = data.z_range();
    if settings.folds <= 1 {
        return fit_and_estimate(
            FitInput::full(data, roles),
            kinds,
            grid,
            z_range,
            settings,
            derive_seed(settings.seed, &[0]),
        );
    }
    let folds = match make_folds(data.len(), settings.folds, settings.seed) {
        Ok(f) => f,
        Err(e) => return kinds.iter().map(|_| Err(e.clone())).collect(),
    };
    let mut per_kind: Vec<Result<Vec<EstimateCurve>>> =
        kinds.iter().map(|_| Ok(Vec::new())).collect();
    for fold in 0..folds.k {
        let eval_idx = folds.members(fold);
        let train_idx = folds.complement(fold);
        let train = data.select(&train_idx);
        let eval = data.select(&eval_idx);
        let train_x = roles.select(&train_idx);
        let eval_x = roles.select(&eval_idx);
        let input = FitInput {
            train: &train,
            train_x: &train_x,
            eval: &eval,
            eval_x: &eval_x,
        };
        let results = fit_and_estimate(
            input,
            kinds,
            grid,
            z_range,
            settings,
            derive_seed(settings.seed, &[1 + fold as u64]),
        );
        for (slot, r) in per_kind.iter_mut().zip(results) {
            if let Ok(v) = slot {
                match r {
                    Ok(c) => v.push(c),
                    Err(e) => *slot = Err(e),
                }
            }
        }
    }
    per_kind
        .into_iter()
        .map(|r| r.map(|curves| average_folds(grid, curves)))
        .collect()
}

/// Single-estimator convenience over [`crossfit_curves`] using the same
/// covariates for every nuisance.
pub fn crossfit_curve(
    data: &SurvivalDataset,
    kind: EstimatorKind,
    grid: &TimeGrid,
    settings: &EstimationSettings,
) -> Result<EstimateCurve> {
    let roles = RoleFeatures::shared(data.covariates());
    crossfit_curves(data, &roles, &[kind], grid, settings)
        .pop()
        .expect("one result per kind")
}

/// Instrument kind guard shared by the CLI and library callers.
pub fn check_kinds(kinds: &[EstimatorKind], iv_kind: IvKind) -> Result<()> {
    kinds.iter().try_for_each(|k| k.check_compatible(iv_kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_balanced_and_reproducible() {
        let f = make_folds(10, 2, 3).unwrap();
        assert_eq!(f.sizes(), vec![5, 5]);
        let mut s = make_folds(10, 3, 3).unwrap().sizes();
        s.sort();
        assert_eq!(s, vec![3, 3, 4]);
        assert_eq!(make_folds(10, 3, 9).unwrap(), make_folds(10, 3, 9).unwrap());
        assert_eq!(make_folds(3, 4, 0), Err(Error::KTooLarge { k: 4, n: 3 }));
        assert_eq!(make_folds(3, 1, 0), Err(Error::KTooLarge { k: 1, n: 3 }));
    }
}
