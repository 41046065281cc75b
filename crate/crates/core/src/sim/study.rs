//! Replicated simulation studies scored against the oracle truth.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossfit::{crossfit_curves, EstimationSettings};
use crate::data::TimeGrid;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::features::Features;
use crate::nuisance::{Role, RoleFeatures};
use crate::rng::{derive_seed, stream};

use super::dgp::{kang_schafer, sample, DgpConfig};
use super::metrics::{bias_rmse, mean_curve};
use super::oracle::oracle_truth;

/// Which nuisance fits receive the distorted covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Specification {
    Correct,
    WrongOmegaDelta,
    WrongPiMu,
    WrongPiOmega,
    WrongPiOmegaMu,
}

impl Specification {
    /// The four patterns of the binary-instrument study.
    pub const BINARY: [Specification; 4] = [
        Specification::Correct,
        Specification::WrongOmegaDelta,
        Specification::WrongPiMu,
        Specification::WrongPiOmega,
    ];

    /// The four patterns of the continuous-instrument study.
    pub const CONTINUOUS: [Specification; 4] = [
        Specification::Correct,
        Specification::WrongOmegaDelta,
        Specification::WrongPiMu,
        Specification::WrongPiOmegaMu,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Specification::Correct => "correct",
            Specification::WrongOmegaDelta => "wrong(omega,delta)",
            Specification::WrongPiMu => "wrong(pi,mu)",
            Specification::WrongPiOmega => "wrong(pi,omega)",
            Specification::WrongPiOmegaMu => "wrong(pi,omega,mu)",
        }
    }

    /// Roles fit on the distorted covariates. `omega` shares its role with
    /// the censoring hazard and `mu` with the event hazard.
    pub fn wrong_roles(self) -> &'static [Role] {
        match self {
            Specification::Correct => &[],
            Specification::WrongOmegaDelta => &[Role::Censoring, Role::Instrument],
            Specification::WrongPiMu => &[Role::Treatment, Role::Outcome],
            Specification::WrongPiOmega => &[Role::Treatment, Role::Censoring],
            Specification::WrongPiOmegaMu => &[Role::Treatment, Role::Censoring, Role::Outcome],
        }
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Specification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        Ok(match key.as_str() {
            "correct" => Specification::Correct,
            "wrong(omega,delta)" | "wrong_omega_delta" => Specification::WrongOmegaDelta,
            "wrong(pi,mu)" | "wrong_pi_mu" => Specification::WrongPiMu,
            "wrong(pi,omega)" | "wrong_pi_omega" => Specification::WrongPiOmega,
            "wrong(pi,omega,mu)" | "wrong_pi_omega_mu" => Specification::WrongPiOmegaMu,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown specification '{other}'"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub dgp: DgpConfig,
    pub scenario: String,
    pub specifications: Vec<Specification>,
    pub estimators: Vec<EstimatorKind>,
    pub replications: usize,
    pub estimation: EstimationSettings,
    /// Monte Carlo size for the oracle.
    pub oracle_m: usize,
    /// Precomputed truth; skips the oracle when set.
    pub truth: Option<Vec<f64>>,
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(dgp: DgpConfig, estimators: Vec<EstimatorKind>) -> Self {
        let seed = dgp.seed;
        Self {
            dgp,
            scenario: "default".into(),
            specifications: vec![Specification::Correct],
            estimators,
            replications: 100,
            estimation: EstimationSettings::default(),
            oracle_m: 1_000_000,
            truth: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        self.estimation.learner.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.estimators.is_empty() || self.specifications.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one estimator and one specification".into(),
            ));
        }
        crate::crossfit::check_kinds(&self.estimators, self.dgp.iv_kind)?;
        if !self.dgp.discretize && self.estimators.iter().any(|k| k.needs_discrete_times()) {
            return Err(Error::InvalidConfig(
                "hazard estimators need discretize = true".into(),
            ));
        }
        if let Some(t) = &self.truth {
            if t.len() != self.dgp.tau {
                return Err(Error::Shape("truth length differs from tau".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub estimator: String,
    pub scenario: String,
    pub specification: String,
    pub bias: f64,
    pub rmse: f64,
    /// Replications that produced a usable curve.
    pub replications: usize,
    pub n: usize,
    pub failed_reps: usize,
    /// Replications whose censoring weights fell below the truncation level.
    pub positivity_flags: usize,
    /// Largest absolute estimate over replications and grid points.
    pub max_abs: f64,
    pub mean_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub scenario: String,
    pub truth: Vec<f64>,
    pub entries: Vec<ReportEntry>,
}

/// Formats with 12 significant digits, shortest form.
pub fn format_sig(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("valid float");
    format!("{rounded}")
}

impl SimReport {
    pub fn entry(&self, estimator: &str, spec: Specification) -> Option<&ReportEntry> {
        self.entries
            .iter()
            .find(|e| e.estimator == estimator && e.specification == spec.label())
    }

    /// One row per estimator x specification.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record([
            "estimator",
            "scenario",
            "specification",
            "bias",
            "rmse",
            "I",
            "n",
            "failed_reps",
        ])
        .map_err(io)?;
        for e in &self.entries {
            out.write_record([
                e.estimator.clone(),
                e.scenario.clone(),
                e.specification.clone(),
                format_sig(e.bias),
                format_sig(e.rmse),
                e.replications.to_string(),
                e.n.to_string(),
                e.failed_reps.to_string(),
            ])
            .map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

struct RepOutcome {
    curve: Option<Vec<f64>>,
    flagged: bool,
}

/// Distorted covariate matrix for the misspecified fits.
pub fn distorted(x: &Features) -> Features {
    let rows: Vec<Vec<f64>> = (0..x.rows())
        .map(|i| kang_schafer(x.row(i)).to_vec())
        .collect();
    Features::from_rows(&rows)
}

fn one_replication(cfg: &StudyConfig, grid: &TimeGrid, r: usize) -> Result<Vec<RepOutcome>> {
    let mut rng = stream(cfg.seed, &[0xDA7A, r as u64]);
    let (data, _) = sample(&cfg.dgp, &mut rng)?;
    let x = data.covariates();
    let w = distorted(&x);
    let mut settings = cfg.estimation.clone();
    settings.seed = derive_seed(cfg.seed, &[0x5E77, r as u64]);
    let mut out = Vec::with_capacity(cfg.specifications.len() * cfg.estimators.len());
    for spec in &cfg.specifications {
        let roles = RoleFeatures::with_wrong(&x, &w, spec.wrong_roles());
        for res in crossfit_curves(&data, &roles, &cfg.estimators, grid, &settings) {
            out.push(match res {
                Ok(c) if !c.weak_instrument && c.psi.iter().all(|v| v.is_finite()) => RepOutcome {
                    flagged: c.diagnostics.positivity_warning,
                    curve: Some(c.psi),
                },
                Ok(c) => RepOutcome {
                    flagged: c.diagnostics.positivity_warning,
                    curve: None,
                },
                Err(_) => RepOutcome {
                    flagged: false,
                    curve: None,
                },
            });
        }
    }
    Ok(out)
}

/// Runs `cfg.replications` independent replications in parallel and
/// scores every estimator under every specification.
///
/// Each replication draws from its own stream derived from
/// `(seed, replication)`, so results do not depend on scheduling.
pub fn run_study(cfg: &StudyConfig) -> Result<SimReport> {
    cfg.validate()?;
    let tau = cfg.dgp.tau;
    let grid = TimeGrid::unit(tau);
    let truth = match &cfg.truth {
        Some(t) => t.clone(),
        None => {
            let kappa = cfg.estimators.iter().find_map(|k| k.kappa());
            oracle_truth(
                &cfg.dgp,
                cfg.oracle_m,
                derive_seed(cfg.seed, &[0x0AC1E]),
                kappa,
            )?
            .late
        }
    };
    let reps: Vec<Result<Vec<RepOutcome>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| one_replication(cfg, &grid, r))
        .collect();
    let reps: Vec<Vec<RepOutcome>> = reps.into_iter().collect::<Result<_>>()?;
    let mut entries = Vec::new();
    let nk = cfg.estimators.len();
    for (si, spec) in cfg.specifications.iter().enumerate() {
        for (ki, kind) in cfg.estimators.iter().enumerate() {
            let slot = si * nk + ki;
            let curves: Vec<Vec<f64>> = reps.iter().filter_map(|r| r[slot].curve.clone()).collect();
            let flags = reps.iter().filter(|r| r[slot].flagged).count();
            let failed = cfg.replications - curves.len();
            let (bias, rmse) = if curves.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                bias_rmse(&curves, &truth, cfg.dgp.n)?
            };
            let max_abs = curves.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            entries.push(ReportEntry {
                estimator: kind.name().to_string(),
                scenario: cfg.scenario.clone(),
                specification: spec.label().to_string(),
                bias,
                rmse,
                replications: curves.len(),
                n: cfg.dgp.n,
                failed_reps: failed,
                positivity_flags: flags,
                max_abs,
                mean_curve: if curves.is_empty() {
                    vec![f64::NAN; tau]
                } else {
                    mean_curve(&curves, tau)
                },
            });
        }
    }
    Ok(SimReport {
        scenario: cfg.scenario.clone(),
        truth,
        entries,
    })
}
