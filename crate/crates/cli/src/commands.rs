//! The three subcommands: each loads its inputs, calls the library and
//! writes its output files.

use std::path::Path;

use ivsurv::bootstrap::bootstrap_curve;
use ivsurv::crossfit::{check_kinds, crossfit_curves};
use ivsurv::sim::{run_study, StudyConfig};
use ivsurv::{EstimateCurve, EstimatorKind, RoleFeatures, SurvivalDataset};

use crate::config::EstimateConfig;
use crate::error::CliError;
use crate::output::{write_estimates, write_replicates, write_report};

pub fn simulate(study: &StudyConfig, out: &Path) -> Result<(), CliError> {
    let report = run_study(study)?;
    write_report(out, &report)
}

fn load(cfg: &EstimateConfig) -> Result<(SurvivalDataset, SurvivalDataset), CliError> {
    let data = SurvivalDataset::read_csv(&cfg.data, cfg.tau, cfg.iv_kind)?.validate()?;
    check_kinds(&cfg.kinds, cfg.iv_kind)?;
    let discrete = data.discretize_times();
    Ok((data, discrete))
}

/// Curves for every configured estimator, in config order. Hazard
/// estimators see the floored follow-up times.
fn point_estimates(
    cfg: &EstimateConfig,
    data: &SurvivalDataset,
    discrete: &SurvivalDataset,
) -> Result<Vec<(String, EstimateCurve)>, CliError> {
    let roles = RoleFeatures::shared(data.covariates());
    let grid = data.grid();
    let (hazard, direct): (Vec<EstimatorKind>, Vec<EstimatorKind>) =
        cfg.kinds.iter().partition(|k| k.needs_discrete_times());
    let mut direct_out = crossfit_curves(data, &roles, &direct, &grid, &cfg.settings).into_iter();
    let mut hazard_out =
        crossfit_curves(discrete, &roles, &hazard, &grid, &cfg.settings).into_iter();
    cfg.kinds
        .iter()
        .map(|k| {
            let next = if k.needs_discrete_times() {
                hazard_out.next()
            } else {
                direct_out.next()
            };
            Ok((k.name().to_string(), next.expect("one result per kind")?))
        })
        .collect()
}

pub fn estimate(cfg: &EstimateConfig, out: &Path) -> Result<(), CliError> {
    let (data, discrete) = load(cfg)?;
    let curves = point_estimates(cfg, &data, &discrete)?;
    write_estimates(&out.join("estimate.csv"), &curves)
}

pub fn bootstrap(cfg: &EstimateConfig, out: &Path) -> Result<(), CliError> {
    let (data, discrete) = load(cfg)?;
    let roles = RoleFeatures::shared(data.covariates());
    let grid = data.grid();
    let mut curves = Vec::with_capacity(cfg.kinds.len());
    for k in &cfg.kinds {
        let d = if k.needs_discrete_times() {
            &discrete
        } else {
            &data
        };
        let res = bootstrap_curve(d, &roles, *k, &grid, &cfg.settings, &cfg.boot)?;
        if cfg.dump_replicates {
            write_replicates(
                &out.join(format!("replicates_{}.csv", k.name())),
                &res.replicates,
            )?;
        }
        curves.push((k.name().to_string(), res.curve));
    }
    write_estimates(&out.join("estimate.csv"), &curves)
}
