use thiserror::Error;

/// Errors raised anywhere in the estimation and simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("row {row}: treatment must be 0 or 1, got {value}")]
    NonBinaryTreatment { row: usize, value: f64 },
    #[error("row {row}: instrument must be 0 or 1 for a binary-instrument dataset, got {value}")]
    NonBinaryInstrument { row: usize, value: f64 },
    #[error("row {row}: event indicator must be 0 or 1, got {value}")]
    NonBinaryEvent { row: usize, value: f64 },
    #[error("row {row}: follow-up time must be finite and >= 0, got {value}")]
    InvalidTime { row: usize, value: f64 },
    #[error("row {row}: covariate vector has length {got}, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row}: non-finite value in covariates or instrument")]
    NonFiniteFeature { row: usize },
    #[error("no rows with {arm}; positivity cannot be checked")]
    DegenerateArm { arm: String },
    #[error("tau must be >= 1")]
    InvalidTau,

    #[error("logistic design matrix is singular")]
    SingularDesign,
    #[error("cannot fit {what}: stratum {stratum} is empty")]
    EmptyCell { what: String, stratum: String },
    #[error("risk set at k={k} is empty in stratum {stratum}")]
    EmptyRiskSet { k: usize, stratum: String },
    #[error("instrument has zero variance")]
    ZeroVarianceInstrument,
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),

    #[error("kappa must satisfy 0 < 2*kappa < z_max - z_min (kappa={kappa}, range={range})")]
    KappaNonPositive { kappa: f64, range: f64 },
    #[error("estimator {estimator} is not compatible with a {iv_kind} instrument")]
    IncompatibleEstimator { estimator: String, iv_kind: String },
    #[error("compliance denominator {denominator:.3e} is below the floor {floor:.1e}")]
    WeakInstrument { denominator: f64, floor: f64 },

    #[error("need 2 <= K <= n (K={k}, n={n})")]
    KTooLarge { k: usize, n: usize },
    #[error("bootstrap unstable: {failed} of {total} resamples failed")]
    BootstrapUnstable { failed: usize, total: usize },

    #[error("hazard is negative at t={t}")]
    NegativeHazard { t: f64 },
    #[error("complier fraction {fraction:.2e} is too small to estimate the local effect")]
    NoCompliers { fraction: f64 },
    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("{path}: line {line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for failures caused by the input data rather than numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyDataset
                | Error::NonBinaryTreatment { .. }
                | Error::NonBinaryInstrument { .. }
                | Error::NonBinaryEvent { .. }
                | Error::InvalidTime { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFiniteFeature { .. }
                | Error::DegenerateArm { .. }
                | Error::InvalidTau
                | Error::Csv { .. }
                | Error::Io(_)
                | Error::IncompatibleEstimator { .. }
        )
    }
}
