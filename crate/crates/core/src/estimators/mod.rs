//! Causal estimators of the complier survival-probability difference and
//! the result type they share.

pub mod binary;
pub mod continuous;
pub mod hazard;

use std::fmt;
use std::str::FromStr;

use crate::data::{IvKind, TimeGrid};
use crate::error::{Error, Result};

pub use binary::{estimate_if_binary, estimate_ipw, estimate_plugin, term_m, term_pi};
pub use continuous::{estimate_if_continuous, estimate_ipw_continuous, estimate_plugin_continuous};
pub use hazard::{estimate_if_hazard, estimate_naive_hazard};

pub const DEFAULT_DENOM_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    IfBinary,
    Ipw,
    PlugIn,
    NaiveHazard,
    IfHazard,
    IfContinuous { kappa: f64 },
    IpwContinuous { kappa: f64 },
    PlugInContinuous { kappa: f64 },
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::IfBinary => "if",
            EstimatorKind::Ipw => "ipw",
            EstimatorKind::PlugIn => "plugin",
            EstimatorKind::NaiveHazard => "naive_hazard",
            EstimatorKind::IfHazard => "if_hazard",
            EstimatorKind::IfContinuous { .. } => "if_continuous",
            EstimatorKind::IpwContinuous { .. } => "ipw_continuous",
            EstimatorKind::PlugInContinuous { .. } => "plugin_continuous",
        }
    }

    pub fn iv_kind(&self) -> IvKind {
        match self {
            EstimatorKind::IfContinuous { .. }
            | EstimatorKind::IpwContinuous { .. }
            | EstimatorKind::PlugInContinuous { .. } => IvKind::Continuous,
            _ => IvKind::Binary,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            EstimatorKind::IfContinuous { kappa }
            | EstimatorKind::IpwContinuous { kappa }
            | EstimatorKind::PlugInContinuous { kappa } => Some(kappa),
            _ => None,
        }
    }

    /// Hazard estimators need integer follow-up times.
    pub fn needs_discrete_times(&self) -> bool {
        matches!(self, EstimatorKind::NaiveHazard | EstimatorKind::IfHazard)
    }

    /// Parses a roster name; continuous kinds take `kappa`.
    pub fn parse(name: &str, kappa: f64) -> Result<Self> {
        Ok(match name {
            "if" => EstimatorKind::IfBinary,
            "ipw" => EstimatorKind::Ipw,
            "plugin" => EstimatorKind::PlugIn,
            "naive_hazard" => EstimatorKind::NaiveHazard,
            "if_hazard" => EstimatorKind::IfHazard,
            "if_continuous" => EstimatorKind::IfContinuous { kappa },
            "ipw_continuous" => EstimatorKind::IpwContinuous { kappa },
            "plugin_continuous" => EstimatorKind::PlugInContinuous { kappa },
            other => return Err(Error::InvalidConfig(format!("unknown estimator '{other}'"))),
        })
    }

    pub fn check_compatible(&self, iv_kind: IvKind) -> Result<()> {
        if self.iv_kind() != iv_kind {
            return Err(Error::IncompatibleEstimator {
                estimator: self.name().to_string(),
                iv_kind: iv_kind.to_string(),
            });
        }
        if let Some(kappa) = self.kappa() {
            if !(kappa > 0.0) {
                return Err(Error::KappaNonPositive {
                    kappa,
                    range: f64::NAN,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    /// Continuous kinds parse with a placeholder `kappa = 0.5`.
    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::parse(s, 0.5)
    }
}

/// Side information about how an estimate was produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Per-fold curves under cross-fitting.
    pub fold_psi: Vec<Vec<f64>>,
    pub fold_denominators: Vec<f64>,
    pub fold_weak: Vec<bool>,
    /// Smallest estimated censoring survival used as a weight (hazard
    /// estimators only).
    pub min_cens_surv: Option<f64>,
    /// Some at-risk subject was weighted by a censoring survival below the
    /// truncation level.
    pub positivity_warning: bool,
    /// Subjects whose shifted instrument hit the support boundary.
    pub boundary_subjects: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCurve {
    pub grid: TimeGrid,
    pub psi: Vec<f64>,
    pub ci_lo: Option<Vec<f64>>,
    pub ci_hi: Option<Vec<f64>>,
    /// Common compliance denominator (1 for estimators without one).
    pub denominator: f64,
    pub weak_instrument: bool,
    pub diagnostics: Diagnostics,
}

impl EstimateCurve {
    /// Divides numerators by the denominator; a denominator below the floor
    /// flags the curve and sets every estimate to NaN.
    pub fn from_ratio(grid: TimeGrid, numerators: Vec<f64>, denominator: f64, floor: f64) -> Self {
        let weak = !(denominator.abs() >= floor);
        let psi = if weak {
            vec![f64::NAN; numerators.len()]
        } else {
            numerators.iter().map(|v| v / denominator).collect()
        };
        Self {
            grid,
            psi,
            ci_lo: None,
            ci_hi: None,
            denominator,
            weak_instrument: weak,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn unflagged(grid: TimeGrid, psi: Vec<f64>) -> Self {
        Self {
            grid,
            psi,
            ci_lo: None,
            ci_hi: None,
            denominator: 1.0,
            weak_instrument: false,
            diagnostics: Diagnostics::default(),
        }
    }

    /// `Err(WeakInstrument)` for a flagged curve.
    pub fn check_strength(&self, floor: f64) -> Result<()> {
        if self.weak_instrument {
            return Err(Error::WeakInstrument {
                denominator: self.denominator,
                floor,
            });
        }
        Ok(())
    }
}

/// Mean of a slice.
pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
