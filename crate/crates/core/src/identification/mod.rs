//! Grey-box identification of the identifiable parameters from measured data.

pub mod cost;
pub mod identify;
pub mod pso;
pub mod refine;
pub mod space;

pub use cost::{cost, CostFunction, CostTarget, PENALTY};
pub use identify::{
    identify, identify_with, restart_seed, run_restart, IdentificationReport, IdentificationResult,
    IdentifyConfig, RestartOutcome, DEFAULT_IDENTIFICATION_DT,
};
pub use pso::{pso, PsoConfig, PsoResult};
pub use refine::{refine, RefineConfig, RefineResult};
pub use space::ParamSpace;
