//! Flat TOML run configuration.
//!
//! Keys mirror the library field names. Unknown keys are rejected so typos
//! surface as config errors instead of silently using defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use ivsurv::bootstrap::BootstrapConfig;
use ivsurv::crossfit::EstimationSettings;
use ivsurv::learners::{DensityMethod, EmptyRiskPolicy, HazardModel, LearnerConfig, Method};
use ivsurv::sim::{Censoring, DgpConfig, Family, Scenario, Specification, StudyConfig};
use ivsurv::{EstimatorKind, IvKind};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Estimate,
    Bootstrap,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    // shared
    pub estimators: Option<Vec<String>>,
    pub kappa: Option<f64>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub denom_floor: Option<f64>,
    // learners
    pub method: Option<Method>,
    pub trunc_eps: Option<f64>,
    pub n_trees: Option<usize>,
    pub min_node: Option<usize>,
    pub mtry: Option<usize>,
    pub subsample: Option<f64>,
    pub density: Option<DensityMethod>,
    pub hazard_model: Option<HazardModel>,
    pub empty_risk: Option<EmptyRiskPolicy>,
    pub one_sided: Option<bool>,
    // data
    pub data: Option<PathBuf>,
    pub iv_kind: Option<IvKind>,
    pub tau: Option<usize>,
    // bootstrap
    pub b: Option<usize>,
    pub alpha: Option<f64>,
    pub dump_replicates: Option<bool>,
    // simulation
    pub preset: Option<String>,
    pub scenario: Option<String>,
    pub specifications: Option<Vec<String>>,
    pub replications: Option<usize>,
    pub oracle_m: Option<usize>,
    pub n: Option<usize>,
    pub family: Option<Family>,
    pub censoring: Option<String>,
    pub censoring_lo: Option<f64>,
    pub censoring_hi: Option<f64>,
    pub censoring_c: Option<f64>,
    pub discretize: Option<bool>,
    pub kappa_coef: Option<Vec<f64>>,
    pub kappa_tilde: Option<Vec<f64>>,
    pub alpha_0: Option<f64>,
    pub alpha_x: Option<Vec<f64>>,
    pub alpha_z: Option<f64>,
    pub alpha_u: Option<f64>,
    pub beta_x: Option<Vec<f64>>,
    pub beta_a: Option<f64>,
    pub beta_u: Option<f64>,
    pub baseline_c1: Option<f64>,
    pub baseline_c2: Option<f64>,
    pub gamma_x: Option<Vec<f64>>,
    pub gamma_z: Option<f64>,
    pub gamma_a: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub data: PathBuf,
    pub iv_kind: IvKind,
    pub tau: usize,
    pub kinds: Vec<EstimatorKind>,
    pub settings: EstimationSettings,
    pub boot: BootstrapConfig,
    pub dump_replicates: bool,
}

#[derive(Debug, Clone)]
pub enum RunConfig {
    Simulate(Box<StudyConfig>),
    Estimate(EstimateConfig),
    Bootstrap(EstimateConfig),
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load(command: Command, path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    build(command, raw, base, seed)
}

fn learner(raw: &RawConfig) -> LearnerConfig {
    let mut l = LearnerConfig::default();
    if let Some(m) = raw.method {
        l.method = m;
    }
    if let Some(v) = raw.trunc_eps {
        l.trunc_eps = v;
    }
    if let Some(v) = raw.n_trees {
        l.forest.n_trees = v;
    }
    if let Some(v) = raw.min_node {
        l.forest.min_node = v;
    }
    if raw.mtry.is_some() {
        l.forest.mtry = raw.mtry;
    }
    if let Some(v) = raw.subsample {
        l.forest.subsample = v;
    }
    if let Some(v) = raw.density {
        l.density = v;
    }
    if let Some(v) = raw.hazard_model {
        l.hazard_model = v;
    }
    if let Some(v) = raw.empty_risk {
        l.empty_risk = v;
    }
    if let Some(v) = raw.one_sided {
        l.one_sided = v;
    }
    l
}

fn kinds(raw: &RawConfig, default: &[&str]) -> Result<Vec<EstimatorKind>, CliError> {
    let kappa = raw.kappa.unwrap_or(0.5);
    let names: Vec<String> = match &raw.estimators {
        Some(v) => v.clone(),
        None => default.iter().map(|s| s.to_string()).collect(),
    };
    if names.is_empty() {
        return Err(config_err("estimators: need at least one"));
    }
    names
        .iter()
        .map(|n| EstimatorKind::parse(n, kappa).map_err(|e| config_err(format!("estimators: {e}"))))
        .collect()
}

fn preset(name: &str) -> Result<DgpConfig, CliError> {
    Ok(match name {
        "cox_binary" => DgpConfig::cox_binary(),
        "additive_binary" => DgpConfig::additive_binary(),
        "additive_continuous" => DgpConfig::additive_continuous(),
        "scenario_i" => DgpConfig::censoring_scenario(Scenario::UniformCensoring),
        "scenario_ii" => DgpConfig::censoring_scenario(Scenario::GapCensoring),
        "scenario_iii" => DgpConfig::censoring_scenario(Scenario::FixedCensoring),
        other => return Err(config_err(format!("preset: unknown preset '{other}'"))),
    })
}

fn censoring(raw: &RawConfig, current: Censoring) -> Result<Censoring, CliError> {
    let Some(name) = raw.censoring.as_deref() else {
        return Ok(current);
    };
    let lo = raw.censoring_lo;
    let hi = raw.censoring_hi;
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| config_err(format!("censoring = \"{name}\" needs {key}")))
    };
    Ok(match name {
        "indicator_logistic" => Censoring::IndicatorLogistic,
        "uniform_indep" => Censoring::UniformIndep {
            lo: need(lo, "censoring_lo")?,
            hi: need(hi, "censoring_hi")?,
        },
        "gap_uniform" => Censoring::GapUniform {
            lo: need(lo, "censoring_lo")?,
            hi: need(hi, "censoring_hi")?,
        },
        "fixed" => Censoring::Fixed {
            c: need(raw.censoring_c, "censoring_c")?,
        },
        other => {
            return Err(config_err(format!(
                "censoring: unknown mechanism '{other}'"
            )))
        }
    })
}

fn dgp(raw: &RawConfig) -> Result<DgpConfig, CliError> {
    let mut d = preset(raw.preset.as_deref().unwrap_or("cox_binary"))?;
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = raw.$field.clone() { d.$field = v; })*
        };
    }
    set!(
        family,
        iv_kind,
        kappa_coef,
        kappa_tilde,
        alpha_0,
        alpha_x,
        alpha_z,
        alpha_u,
        beta_x,
        beta_a,
        beta_u,
        gamma_x,
        gamma_z,
        gamma_a,
        discretize,
        n,
        tau
    );
    if let Some(v) = raw.baseline_c1 {
        d.baseline.0 = v;
    }
    if let Some(v) = raw.baseline_c2 {
        d.baseline.1 = v;
    }
    d.censoring = censoring(raw, d.censoring)?;
    Ok(d)
}

fn settings(raw: &RawConfig, default_folds: usize, seed: u64) -> EstimationSettings {
    let mut s = EstimationSettings {
        folds: raw.folds.unwrap_or(default_folds),
        learner: learner(raw),
        seed,
        ..EstimationSettings::default()
    };
    if let Some(f) = raw.denom_floor {
        s.denom_floor = f;
    }
    s
}

pub fn build(
    command: Command,
    raw: RawConfig,
    base: &Path,
    seed_flag: Option<u64>,
) -> Result<RunConfig, CliError> {
    let seed = seed_flag.or(raw.seed).unwrap_or(0);
    let run = match command {
        Command::Simulate => {
            let mut d = dgp(&raw)?;
            d.seed = seed;
            let default_kinds: &[&str] = match d.iv_kind {
                IvKind::Binary => &["if", "ipw", "plugin"],
                IvKind::Continuous => &["if_continuous", "ipw_continuous", "plugin_continuous"],
            };
            let mut study = StudyConfig::new(d, kinds(&raw, default_kinds)?);
            study.seed = seed;
            study.scenario = raw
                .scenario
                .clone()
                .unwrap_or_else(|| raw.preset.clone().unwrap_or_else(|| "cox_binary".into()));
            if let Some(specs) = &raw.specifications {
                study.specifications = specs
                    .iter()
                    .map(|s| s.parse::<Specification>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| config_err(format!("specifications: {e}")))?;
            }
            if let Some(r) = raw.replications {
                study.replications = r;
            }
            if let Some(m) = raw.oracle_m {
                study.oracle_m = m;
            }
            study.estimation = settings(&raw, 1, seed);
            study.validate().map_err(|e| config_err(e.to_string()))?;
            RunConfig::Simulate(Box::new(study))
        }
        Command::Estimate | Command::Bootstrap => {
            let data = raw
                .data
                .as_ref()
                .ok_or_else(|| config_err("data: required for estimate and bootstrap"))?;
            let data = if data.is_absolute() {
                data.clone()
            } else {
                base.join(data)
            };
            if !data.exists() {
                return Err(config_err(format!(
                    "data: {} does not exist",
                    data.display()
                )));
            }
            let iv_kind = raw.iv_kind.unwrap_or(IvKind::Binary);
            let default_kinds: &[&str] = match iv_kind {
                IvKind::Binary => &["if"],
                IvKind::Continuous => &["if_continuous"],
            };
            let mut boot = BootstrapConfig {
                seed: ivsurv::rng::derive_seed(seed, &[0xB0]),
                ..BootstrapConfig::default()
            };
            if let Some(b) = raw.b {
                boot.b = b;
            }
            if let Some(a) = raw.alpha {
                boot.alpha = a;
            }
            let cfg = EstimateConfig {
                data,
                iv_kind,
                tau: raw.tau.unwrap_or(30),
                kinds: kinds(&raw, default_kinds)?,
                settings: settings(&raw, 10, seed),
                boot,
                dump_replicates: raw.dump_replicates.unwrap_or(false),
            };
            cfg.settings
                .learner
                .validate()
                .map_err(|e| config_err(e.to_string()))?;
            if cfg.tau == 0 {
                return Err(config_err("tau must be >= 1"));
            }
            if command == Command::Bootstrap {
                cfg.boot.validate().map_err(|e| config_err(e.to_string()))?;
                RunConfig::Bootstrap(cfg)
            } else {
                RunConfig::Estimate(cfg)
            }
        }
    };
    Ok(run)
}
