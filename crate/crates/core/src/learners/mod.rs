//! Binary-outcome learners shared by every nuisance fit.

pub mod density;
pub mod forest;
pub mod logistic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Features;

pub use density::{ConditionalDensity, DensityMethod};
pub use forest::{ForestParams, ProbabilityForest};
pub use logistic::{expit, fit_logistic, LogisticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Logistic,
    Forest,
}

/// How discrete hazards are modelled across grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardModel {
    /// A separate regression on each risk set.
    #[default]
    PerTime,
    /// One person-period regression with `ln k`, `ln^2 k` appended.
    Pooled,
}

/// What to do when a stratum's risk set runs empty before `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyRiskPolicy {
    /// Reuse the last fitted event-hazard model; censoring hazard set to 0.
    #[default]
    CarryForward,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub method: Method,
    pub trunc_eps: f64,
    pub forest: ForestParams,
    pub density: DensityMethod,
    pub hazard_model: HazardModel,
    pub empty_risk: EmptyRiskPolicy,
    /// Structural one-sided noncompliance: nobody with `z = 0` is treated.
    pub one_sided: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            method: Method::Logistic,
            trunc_eps: 0.01,
            forest: ForestParams::default(),
            density: DensityMethod::Gaussian,
            hazard_model: HazardModel::PerTime,
            empty_risk: EmptyRiskPolicy::CarryForward,
            one_sided: false,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.trunc_eps > 0.0 && self.trunc_eps < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "trunc_eps must lie in (0, 0.5), got {}",
                self.trunc_eps
            )));
        }
        let f = &self.forest;
        if f.n_trees == 0 || f.min_node == 0 || !(f.subsample > 0.0 && f.subsample <= 1.0) {
            return Err(Error::InvalidConfig(
                "forest needs n_trees >= 1, min_node >= 1 and subsample in (0, 1]".into(),
            ));
        }
        if f.mtry == Some(0) {
            return Err(Error::InvalidConfig("mtry must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Fit {
    Constant(f64),
    Logistic(LogisticModel),
    Forest(ProbabilityForest),
}

/// A fitted `P(y = 1 | x)` whose predictions are clipped to `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    fit: Fit,
    lo: f64,
    hi: f64,
    feature_dim: usize,
}

impl BinaryModel {
    pub fn constant(p: f64, lo: f64, hi: f64, feature_dim: usize) -> Self {
        Self {
            fit: Fit::Constant(p),
            lo,
            hi,
            feature_dim,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.fit, Fit::Constant(_))
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let p = match &self.fit {
            Fit::Constant(p) => *p,
            Fit::Logistic(m) => m.predict(x),
            Fit::Forest(f) => f.predict(x),
        };
        p.clamp(self.lo, self.hi)
    }

    pub fn predict_all(&self, x: &Features) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    pub fn logistic(&self) -> Option<&LogisticModel> {
        match &self.fit {
            Fit::Logistic(m) => Some(m),
            _ => None,
        }
    }
}

/// Fits a binary regression with predictions bounded to `[lo, hi]`.
///
/// Labels of a single class give a constant model at the clipped empirical
/// mean. `seed` only matters for forests.
pub fn fit_binary_bounded(
    x: &Features,
    y: &[f64],
    cfg: &LearnerConfig,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<BinaryModel> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Shape("cannot fit a model on zero rows".into()));
    }
    if y.len() != n {
        return Err(Error::Shape(format!("{} labels for {} rows", y.len(), n)));
    }
    if let Some(i) = (0..n).find(|&i| x.row(i).iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFiniteFeature { row: i });
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let feature_dim = x.cols();
    if mean == 0.0 || mean == 1.0 || feature_dim == 0 {
        return Ok(BinaryModel::constant(mean, lo, hi, feature_dim));
    }
    let fit = match cfg.method {
        Method::Logistic => Fit::Logistic(fit_logistic(x, y)?),
        Method::Forest => {
            let mut rng = crate::rng::stream(seed, &[]);
            Fit::Forest(ProbabilityForest::fit(x, y, &cfg.forest, &mut rng))
        }
    };
    Ok(BinaryModel {
        fit,
        lo,
        hi,
        feature_dim,
    })
}

/// [`fit_binary_bounded`] with the symmetric `[eps, 1 - eps]` truncation.
pub fn fit_binary_model(
    x: &Features,
    y: &[f64],
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<BinaryModel> {
    fit_binary_bounded(x, y, cfg, cfg.trunc_eps, 1.0 - cfg.trunc_eps, seed)
}
