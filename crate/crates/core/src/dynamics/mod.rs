//! Implicit state-space assembly, explicit solve for the state derivative,
//! fixed-step integration and the output map.

pub mod integrate;
pub mod linalg;
pub mod system;

pub use integrate::{
    rk4_step, simulate, simulate_outputs_at, step_rk4, time_grid, Diagnostics, InputSource,
    InputTrajectory, MirroredSteer, SimulationResult, DEFAULT_DT,
};
pub use system::{
    assemble, coupling_constraint_residual, output, state_derivative, AssembledSystem,
    Derivative, EvalFlags, RCOND_LIMIT,
};
