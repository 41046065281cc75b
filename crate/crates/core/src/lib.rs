//! Doubly robust instrumental-variable estimation of complier survival
//! probability differences, with cross-fitting, bootstrap bands and a
//! simulation engine.

pub mod bootstrap;
pub mod crossfit;
pub mod data;
pub mod error;
pub mod estimators;
pub mod features;
pub mod learners;
pub mod nuisance;
pub mod rng;
pub mod sim;

pub use bootstrap::{bootstrap_curve, BootstrapConfig, BootstrapResult};
pub use crossfit::{
    crossfit_curve, crossfit_curves, make_folds, EstimationSettings, FoldAssignment,
};
pub use data::{IvKind, Observation, SurvivalDataset, TimeGrid};
pub use error::{Error, Result};
pub use estimators::{EstimateCurve, EstimatorKind};
pub use features::Features;
pub use learners::{LearnerConfig, Method};
pub use nuisance::{Role, RoleFeatures};
