//! Simulation engine: data-generating processes, oracle truth, metrics and
//! replicated studies.

pub mod dgp;
pub mod metrics;
pub mod oracle;
pub mod study;

pub use dgp::{
    apply_censoring, censor_with_draw, cumulative_by_quadrature, invert_cumulative_hazard,
    invert_hazard, kang_schafer, sample, sample_additive, sample_cox, Censoring, DgpConfig, Family,
    Latent, Scenario,
};
pub use metrics::{bias_rmse, mean_curve};
pub use oracle::{oracle_truth, potential_treatments, OracleTruth};
pub use study::{
    distorted, format_sig, run_study, ReportEntry, SimReport, Specification, StudyConfig,
};
