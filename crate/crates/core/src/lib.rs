//! Optimal dividend barriers for insurance surplus processes whose premium
//! rate depends on the current surplus.
//!
//! The pipeline is: [`model`] (problem instance and validation) →
//! [`scale`] (the scale function `W_q` and the Gerber-Shiu function
//! `G_{q,w}`) → [`barrier`] (barrier-quality function, optimal barrier and
//! value function) → [`hjb`] (optimality verification). [`simulate`] is an
//! exact Monte-Carlo simulator of the controlled process used to
//! cross-check every analytic quantity.

pub mod barrier;
pub mod flow;
pub mod hjb;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod scale;
pub mod simulate;
pub mod tables;

pub use barrier::{
    barrier_boundary_identity, barrier_solution_at, find_barrier, find_barrier_with, h_eval,
    value_function, BarrierError, BarrierOptions, BarrierSolution,
};
pub use flow::{FlowError, FlowSolver};
pub use hjb::{
    generator_apply, generator_residuals, verify_optimality, Extension, HjbError, OptimalityReport,
};
pub use model::{
    omega_eval, validate_model, ClaimModel, ModelError, ModelParams, PenaltyModel, PremiumModel,
    ValidationReport,
};
pub use scale::{compute_g, compute_w, solve_scale, GridFunction, ScaleError, ScaleSolution};
pub use simulate::{
    simulate_gerber_shiu, simulate_two_sided, simulate_value, trace_path, ClaimEvent, PathTrace,
    SimulationConfig, SimulationError, SimulationEstimate,
};
