//! Data-generating processes: Cox and additive hazards outcome models with
//! an unmeasured confounder, binary or continuous instruments, and four
//! censoring mechanisms.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{discretize_time, IvKind, Observation, SurvivalDataset};
use crate::error::{Error, Result};
use crate::learners::expit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CoxPh,
    AdditiveHazards,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    /// `R` drawn from a logistic model; the follow-up time is `T` itself.
    IndicatorLogistic,
    /// `C ~ U(lo, hi)` independent of everything.
    UniformIndep { lo: f64, hi: f64 },
    /// `C = max(1, T + U(lo, hi))`: censoring informed by the event time.
    GapUniform { lo: f64, hi: f64 },
    /// `C = c` for everybody.
    Fixed { c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub family: Family,
    pub iv_kind: IvKind,
    /// Instrument coefficients on the five covariates (binary instrument).
    pub kappa_coef: Vec<f64>,
    /// Instrument mean coefficients on the first two covariates
    /// (continuous instrument).
    pub kappa_tilde: Vec<f64>,
    pub alpha_0: f64,
    pub alpha_x: Vec<f64>,
    pub alpha_z: f64,
    pub alpha_u: f64,
    pub beta_x: Vec<f64>,
    pub beta_a: f64,
    pub beta_u: f64,
    /// Baseline hazard `c1 t + c2 t^2`.
    pub baseline: (f64, f64),
    pub gamma_x: Vec<f64>,
    pub gamma_z: f64,
    pub gamma_a: f64,
    pub censoring: Censoring,
    /// Floor follow-up times onto the integer grid.
    pub discretize: bool,
    pub n: usize,
    pub tau: usize,
    pub seed: u64,
}

const Q: usize = 5;

impl DgpConfig {
    /// Cox model, binary instrument, logistic censoring indicator.
    pub fn cox_binary() -> Self {
        Self {
            family: Family::CoxPh,
            iv_kind: IvKind::Binary,
            kappa_coef: vec![-0.5, -0.5, 1.0, -1.0, -0.7],
            kappa_tilde: vec![-1.0, -1.0],
            alpha_0: -0.1,
            alpha_x: vec![0.5, 0.5, -1.0, -1.0, 1.5],
            alpha_z: 2.0,
            alpha_u: -0.3,
            beta_x: vec![0.5, 0.5, -0.5, -0.5, -0.5],
            beta_a: 1.5,
            beta_u: 0.5,
            baseline: (0.0005, 0.0003),
            gamma_x: vec![0.3, 0.3, -0.3, -0.3, -0.3],
            gamma_z: -0.5,
            gamma_a: 0.5,
            censoring: Censoring::IndicatorLogistic,
            discretize: false,
            n: 1000,
            tau: 30,
            seed: 0,
        }
    }

    /// Additive hazards model, binary instrument, logistic censoring
    /// indicator.
    pub fn additive_binary() -> Self {
        Self {
            family: Family::AdditiveHazards,
            alpha_0: 0.1,
            alpha_x: vec![0.1, 0.1, -0.2, -0.2, 0.3],
            alpha_u: 0.3,
            beta_x: vec![0.01, 0.01, -0.01, -0.01, -0.01],
            beta_a: 0.03,
            beta_u: -0.01,
            gamma_x: vec![-0.3, -0.3, 0.3, 0.3, 0.3],
            gamma_z: 0.5,
            gamma_a: -0.5,
            ..Self::cox_binary()
        }
    }

    /// Additive hazards model with a continuous instrument.
    pub fn additive_continuous() -> Self {
        Self {
            iv_kind: IvKind::Continuous,
            beta_u: -0.02,
            ..Self::additive_binary()
        }
    }

    /// Cox model under one of the three censoring scenarios, on the
    /// integer grid.
    pub fn censoring_scenario(s: Scenario) -> Self {
        let (alpha_u, beta_u, censoring) = match s {
            Scenario::UniformCensoring => (
                0.3,
                2.5,
                Censoring::UniformIndep {
                    lo: 10.0,
                    hi: 100.0,
                },
            ),
            Scenario::GapCensoring => (
                0.3,
                2.5,
                Censoring::GapUniform {
                    lo: -10.0,
                    hi: 50.0,
                },
            ),
            Scenario::FixedCensoring => (0.0, 0.5, Censoring::Fixed { c: 20.0 }),
        };
        Self {
            alpha_u,
            beta_u,
            censoring,
            discretize: true,
            ..Self::cox_binary()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, v) in [
            ("kappa_coef", &self.kappa_coef),
            ("alpha_x", &self.alpha_x),
            ("beta_x", &self.beta_x),
            ("gamma_x", &self.gamma_x),
        ] {
            if v.len() != Q {
                return bad(format!("{name} must have {Q} entries, got {}", v.len()));
            }
        }
        if self.kappa_tilde.len() != 2 {
            return bad("kappa_tilde must have 2 entries".into());
        }
        if self.baseline.0 < 0.0 || self.baseline.1 < 0.0 {
            return bad("baseline hazard coefficients must be >= 0".into());
        }
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.tau == 0 {
            return Err(Error::InvalidTau);
        }
        match self.censoring {
            Censoring::UniformIndep { lo, hi } | Censoring::GapUniform { lo, hi } if !(lo < hi) => {
                bad("censoring bounds need lo < hi".into())
            }
            Censoring::Fixed { c } if !(c > 0.0) => bad("fixed censoring time must be > 0".into()),
            _ => Ok(()),
        }
    }

    /// Administrative cap on event times.
    pub fn t_max(&self) -> f64 {
        10.0 * self.tau as f64
    }

    /// Baseline cumulative hazard `c1 t^2 / 2 + c2 t^3 / 3`.
    pub fn baseline_cumulative(&self, t: f64) -> f64 {
        0.5 * self.baseline.0 * t * t + self.baseline.1 * t * t * t / 3.0
    }

    /// Cumulative hazard at `t` for linear predictor `lp`.
    pub fn cumulative_hazard(&self, t: f64, lp: f64) -> f64 {
        match self.family {
            Family::CoxPh => self.baseline_cumulative(t) * lp.exp(),
            Family::AdditiveHazards => self.baseline_cumulative(t) + t * lp.exp(),
        }
    }

    /// Outcome linear predictor `x'beta_x + a beta_a + u beta_u`.
    pub fn outcome_lp(&self, x: &[f64], a: f64, u: f64) -> f64 {
        dot(x, &self.beta_x) + a * self.beta_a + u * self.beta_u
    }

    /// Treatment linear predictor without the instrument term.
    pub fn treatment_lp0(&self, x: &[f64], u: f64) -> f64 {
        self.alpha_0 + dot(x, &self.alpha_x) + u * self.alpha_u
    }

    /// Event time for unit-exponential draw `e`.
    pub fn event_time(&self, e: f64, lp: f64) -> f64 {
        let t_max = self.t_max();
        match self.family {
            // H0(t) = e * exp(-lp) keeps the cubic well scaled
            Family::CoxPh => {
                let target = e * (-lp).exp();
                invert_cumulative_hazard(target, |t| self.baseline_cumulative(t), t_max)
            }
            Family::AdditiveHazards => {
                invert_cumulative_hazard(e, |t| self.cumulative_hazard(t, lp), t_max)
            }
        }
    }
}

/// The three censoring scenarios of the risk-set study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// (i) `C ~ U(10, 100)` with strong unmeasured confounding.
    UniformCensoring,
    /// (ii) `C = T + U(-10, 50)`.
    GapCensoring,
    /// (iii) `C = 20`, no unmeasured confounding.
    FixedCensoring,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::UniformCensoring => "i",
            Scenario::GapCensoring => "ii",
            Scenario::FixedCensoring => "iii",
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `cumulative(t) = target` on `[0, t_max]` by bisection down to
/// adjacent floating-point values (well inside 1e-10).
///
/// `cumulative` must be nondecreasing. Returns `t_max` when the target is
/// never reached.
pub fn invert_cumulative_hazard(target: f64, cumulative: impl Fn(f64) -> f64, t_max: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    if cumulative(t_max) < target {
        return t_max;
    }
    let mut lo = 0.0;
    let mut hi = t_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cumulative(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the closer endpoint in cumulative scale
    if (cumulative(lo) - target).abs() <= (cumulative(hi) - target).abs() {
        lo
    } else {
        hi
    }
}

/// Cumulative of an arbitrary nonnegative hazard by composite Simpson's
/// rule.
pub fn cumulative_by_quadrature(hazard: &impl Fn(f64) -> f64, t: f64) -> Result<f64> {
    const PANELS: usize = 512;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let h = t / PANELS as f64;
    let mut s = 0.0;
    for k in 0..=PANELS {
        let x = k as f64 * h;
        let v = hazard(x);
        if v < 0.0 {
            return Err(Error::NegativeHazard { t: x });
        }
        let w = if k == 0 || k == PANELS {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * v;
    }
    Ok(s * h / 3.0)
}

/// Inverts the cumulative of a general hazard callable via quadrature.
pub fn invert_hazard(target: f64, hazard: impl Fn(f64) -> f64, t_max: f64) -> Result<f64> {
    // reject negative hazards up front so bisection sees a monotone function
    cumulative_by_quadrature(&hazard, t_max)?;
    let cum = |t: f64| cumulative_by_quadrature(&hazard, t).unwrap_or(f64::NAN);
    Ok(invert_cumulative_hazard(target, cum, t_max))
}

/// Kang–Schafer style nonlinear distortion of five covariates.
pub fn kang_schafer(x: &[f64]) -> [f64; 5] {
    [
        (x[0] / 2.0).exp(),
        x[1] / (1.0 + x[0].exp()) + 10.0,
        (x[0] * x[2] / 25.0 + 0.6).powi(3),
        (x[1] + x[3] + 20.0).powi(2),
        x[4],
    ]
}

/// Latent quantities kept for diagnostics; never seen by estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    pub event_time: Vec<f64>,
    pub censor_time: Vec<Option<f64>>,
    pub u: Vec<f64>,
}

/// Observed `(time, r)` from an event time and the censoring draw.
///
/// `draw` is the uniform on `[0, 1)` feeding the censoring mechanism
/// (ignored for fixed censoring) and `r_indicator` the logistic-mode flag.
pub fn censor_with_draw(
    t: f64,
    censoring: Censoring,
    draw: f64,
    r_indicator: bool,
) -> (f64, f64, Option<f64>) {
    let c = match censoring {
        Censoring::IndicatorLogistic => {
            return (t, r_indicator as u8 as f64, None);
        }
        Censoring::UniformIndep { lo, hi } => lo + (hi - lo) * draw,
        Censoring::GapUniform { lo, hi } => (t + lo + (hi - lo) * draw).max(1.0),
        Censoring::Fixed { c } => c,
    };
    (t.min(c), (t < c) as u8 as f64, Some(c))
}

/// Applies the configured censoring to event time `t` for a subject with
/// covariates `x`, instrument `z` and treatment `a`.
pub fn apply_censoring(
    cfg: &DgpConfig,
    t: f64,
    x: &[f64],
    z: f64,
    a: f64,
    rng: &mut ChaCha8Rng,
) -> (f64, f64, Option<f64>) {
    match cfg.censoring {
        Censoring::IndicatorLogistic => {
            let p = expit(dot(x, &cfg.gamma_x) + z * cfg.gamma_z + a * cfg.gamma_a);
            let r = rng.random::<f64>() < p;
            censor_with_draw(t, cfg.censoring, 0.0, r)
        }
        Censoring::Fixed { .. } => censor_with_draw(t, cfg.censoring, 0.0, false),
        _ => {
            let u = rng.random::<f64>();
            censor_with_draw(t, cfg.censoring, u, false)
        }
    }
}

/// Draws one dataset of `cfg.n` subjects.
pub fn sample(cfg: &DgpConfig, rng: &mut ChaCha8Rng) -> Result<(SurvivalDataset, Latent)> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.n);
    let mut latent = Latent {
        event_time: Vec::with_capacity(cfg.n),
        censor_time: Vec::with_capacity(cfg.n),
        u: Vec::with_capacity(cfg.n),
    };
    for _ in 0..cfg.n {
        let x: Vec<f64> = (0..Q).map(|_| rng.sample(StandardNormal)).collect();
        let u: f64 = rng.sample(StandardNormal);
        let z = match cfg.iv_kind {
            IvKind::Binary => (rng.random::<f64>() < expit(dot(&x, &cfg.kappa_coef))) as u8 as f64,
            IvKind::Continuous => {
                dot(&x[..2], &cfg.kappa_tilde) + rng.sample::<f64, _>(StandardNormal)
            }
        };
        let a =
            (rng.random::<f64>() < expit(cfg.treatment_lp0(&x, u) + z * cfg.alpha_z)) as u8 as f64;
        let e: f64 = rng.sample(Exp1);
        let t = cfg.event_time(e, cfg.outcome_lp(&x, a, u));
        let (mut time, r, c) = apply_censoring(cfg, t, &x, z, a, rng);
        if cfg.discretize {
            time = discretize_time(time);
        }
        latent.event_time.push(t);
        latent.censor_time.push(c);
        latent.u.push(u);
        rows.push(Observation::new(x, z, a, time, r));
    }
    Ok((SurvivalDataset::new(rows, cfg.tau, cfg.iv_kind), latent))
}

/// [`sample`] restricted to the Cox family.
pub fn sample_cox(cfg: &DgpConfig, rng: &mut ChaCha8Rng) -> Result<(SurvivalDataset, Latent)> {
    if cfg.family != Family::CoxPh {
        return Err(Error::InvalidConfig(
            "sample_cox needs family = cox_ph".into(),
        ));
    }
    sample(cfg, rng)
}

/// [`sample`] restricted to the additive hazards family.
pub fn sample_additive(cfg: &DgpConfig, rng: &mut ChaCha8Rng) -> Result<(SurvivalDataset, Latent)> {
    if cfg.family != Family::AdditiveHazards {
        return Err(Error::InvalidConfig(
            "sample_additive needs family = additive_hazards".into(),
        ));
    }
    sample(cfg, rng)
}
