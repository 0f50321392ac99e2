//! Grid selection and the scale → barrier chain with sensible defaults.

use serde::Serialize;
use thiserror::Error;

use crate::barrier::{find_barrier, BarrierError, BarrierSolution};
use crate::model::ModelParams;
use crate::scale::{max_step, solve_scale, ScaleError, ScaleSolution};

/// Default grid step when the caller does not choose one.
pub const DEFAULT_STEP: f64 = 0.005;
/// Grid lengths in mean claim sizes.
const MIN_REACH_CLAIMS: f64 = 50.0;
const MAX_DOUBLINGS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPlan {
    pub dx: f64,
    pub x_max: f64,
}

/// `min(0.005, 0.01 * min(1/lambda, E[C]))`.
pub fn default_step(params: &ModelParams) -> f64 {
    DEFAULT_STEP.min(max_step(params))
}

/// Solves on the grid, and if the grid overflows retries on the largest
/// safe domain.
fn solve_fitting(params: &ModelParams, dx: f64, x_max: f64) -> Result<ScaleSolution, ScaleError> {
    match solve_scale(params, dx, x_max) {
        Err(ScaleError::Overflow {
            largest_safe_x_max, ..
        }) => solve_scale(params, dx, 0.9 * largest_safe_x_max),
        other => other,
    }
}

/// Picks `x_max` from a coarse pass: ten times the coarse barrier, and at
/// least 50 mean claim sizes.
pub fn plan_grid(params: &ModelParams, dx: Option<f64>) -> Result<GridPlan, PipelineError> {
    let dx = dx.unwrap_or_else(|| default_step(params));
    let mean = params.mean_claim();
    let coarse_dx = max_step(params);
    let end = params.premium.domain_end();
    let mut reach = (MIN_REACH_CLAIMS * mean).min(end);
    let mut guess = None;
    for _ in 0..MAX_DOUBLINGS {
        let scale = solve_fitting(params, coarse_dx, reach)?;
        match find_barrier(&scale) {
            Ok(b) => {
                guess = Some(b.a_star);
                break;
            }
            Err(BarrierError::DomainTooShort { .. }) if reach < end => {
                reach = (2.0 * reach).min(end)
            }
            Err(e) => return Err(e.into()),
        }
    }
    let guess = guess.ok_or(BarrierError::DomainTooShort { x_end: reach })?;
    let x_max = (10.0 * guess)
        .max(MIN_REACH_CLAIMS * mean)
        .max(guess + 10.0 * mean)
        .min(end);
    Ok(GridPlan { dx, x_max })
}

/// Scale functions and optimal barrier on `plan` (planned when absent).
pub fn optimal_barrier(
    params: &ModelParams,
    plan: Option<GridPlan>,
) -> Result<(GridPlan, BarrierSolution), PipelineError> {
    let plan = match plan {
        Some(p) => p,
        None => plan_grid(params, None)?,
    };
    let scale = solve_fitting(params, plan.dx, plan.x_max)?;
    let solution = find_barrier(&scale)?;
    Ok((
        GridPlan {
            dx: plan.dx,
            x_max: scale.domain_end,
        },
        solution,
    ))
}
