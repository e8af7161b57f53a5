//! Weight-update rules for linear fusion of sub-detector confidences.

mod bregman;
mod session;
mod types;
mod update;

pub use bregman::{solve_multiplier, Cost, CostFunctional, EntropyCost, EuclideanCost, Multiplier, MAX_EXPONENT};
pub use session::{FusionSession, HistoryEntry, StepOutcome};
pub use types::{
    Algorithm, DecisionVector, FusionConfig, FusionError, FusionUpdateResult, OracleLabel, Solver,
    UpdateStatus, WeightVector,
};
pub use update::{
    apply_update, bregman_project, decide, eadf_update, init_weights, pocs_update, predict,
    ulp_update,
};
