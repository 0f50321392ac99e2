//! Scale functions `W_q` and `G_{q,w}` on a uniform grid.
//!
//! `W_q` solves `p W' = (lambda+q) W - lambda int_0^x W(x-z) f(z) dz` with
//! `W(0) = 1`. `G_{q,w}` solves the same relation with the extra source
//! `-lambda omega(x)`; it is assembled as `G_p + gamma W`, where `G_p(0) = 0`
//! and `gamma` removes the growing mode at the end of the grid.

mod closed_form;
mod grid;
mod kummer;
mod lode;
mod volterra;

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, ModelParams};
use volterra::{Kernel, March, MarchFailure};

pub use closed_form::{
    classical_ruin_g, closed_form_w_linear, ClassicalScale, ClosedFormError, LinearKummerScale,
    MAX_CONDITION,
};
pub use grid::{GridError, GridFunction};
pub use kummer::{
    kummer_m, kummer_m_prime, kummer_u, kummer_u_prime, KummerError, CANCELLATION_LIMIT,
    U_ASYMPTOTIC_CROSSOVER,
};
pub use lode::{LodeError, LodeOperatorSpec};

/// Largest admissible step as a fraction of `min(1/lambda, E[C])`.
pub const MAX_STEP_FRACTION: f64 = 0.01;
/// Nodes sampled when measuring the equation residual.
const RESIDUAL_SAMPLES: usize = 200;
/// At most this many offending abscissae are kept per flag.
const FLAG_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("step dx = {dx} exceeds the limit {limit}")]
    StepTooLarge { dx: f64, limit: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("scale function overflows at x = {x}; largest safe x_max is {largest_safe_x_max}")]
    Overflow { x: f64, largest_safe_x_max: f64 },
    #[error("non-finite value produced at x = {x}")]
    NonFinite { x: f64 },
    #[error("|G| is not decaying near x_max = {x_max}; try x_max = {suggested}")]
    TruncationTooShort { x_max: f64, suggested: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Residual norms and sign flags from one solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleDiagnostics {
    /// Max-norm residual of the `W` relation on sampled nodes.
    pub w_residual: f64,
    /// Same for `G`, including the `omega` source.
    pub g_residual: f64,
    pub max_abs_w: f64,
    pub max_abs_g: f64,
    /// Grid points where `W' <= 0` (first few).
    pub nonpositive_w_slope: Vec<f64>,
    pub nonpositive_w_slope_count: usize,
    /// Grid points where `1 - G' <= 0` (first few).
    pub nonpositive_one_minus_g_slope: Vec<f64>,
    pub nonpositive_one_minus_g_slope_count: usize,
}

impl ScaleDiagnostics {
    pub fn flagged(&self) -> bool {
        self.nonpositive_w_slope_count > 0 || self.nonpositive_one_minus_g_slope_count > 0
    }
}

/// `W_q`, `G_{q,w}` and the instance they were computed for.
#[derive(Debug, Clone)]
pub struct ScaleSolution {
    pub w: GridFunction,
    pub g: GridFunction,
    pub domain_end: f64,
    pub stable_coefficient: f64,
    pub diagnostics: ScaleDiagnostics,
    pub params: ModelParams,
}

/// `0.01 * min(1/lambda, E[C])`.
pub fn max_step(params: &ModelParams) -> f64 {
    MAX_STEP_FRACTION * (1.0 / params.lambda).min(params.mean_claim())
}

fn grid_size(params: &ModelParams, dx: f64, x_max: f64) -> Result<usize, ScaleError> {
    params.check()?;
    let limit = max_step(params);
    if !(dx > 0.0) || dx > limit * (1.0 + 1e-12) {
        return Err(ScaleError::StepTooLarge { dx, limit });
    }
    if !(x_max.is_finite() && x_max >= dx) {
        return Err(ScaleError::InvalidDomain(format!(
            "x_max = {x_max} must be at least dx = {dx}"
        )));
    }
    let steps = (x_max / dx - 1e-9).ceil() as usize;
    let end = steps as f64 * dx;
    let premium_end = params.premium.domain_end();
    if end > premium_end * (1.0 + 1e-12) {
        return Err(ScaleError::InvalidDomain(format!(
            "grid end {end} lies beyond the tabulated premium domain {premium_end}"
        )));
    }
    Ok(steps + 1)
}

fn run(kernel: &Kernel, y0: f64, source: Option<&[f64]>) -> Result<March, ScaleError> {
    kernel.march(y0, source).map_err(|e| match e {
        MarchFailure::Overflow { x, last_safe } => ScaleError::Overflow {
            x,
            largest_safe_x_max: last_safe,
        },
        MarchFailure::NonFinite { x } => ScaleError::NonFinite { x },
    })
}

fn flags(xs: impl Iterator<Item = (f64, bool)>) -> (Vec<f64>, usize) {
    let mut kept = Vec::new();
    let mut count = 0;
    for (x, bad) in xs {
        if bad {
            count += 1;
            if kept.len() < FLAG_LIMIT {
                kept.push(x);
            }
        }
    }
    (kept, count)
}

/// `W_q` on `[0, x_max]` (rounded up to a whole number of steps).
pub fn compute_w(params: &ModelParams, dx: f64, x_max: f64) -> Result<GridFunction, ScaleError> {
    let n = grid_size(params, dx, x_max)?;
    let kernel = Kernel::new(params, dx, n);
    let w = run(&kernel, 1.0, None)?;
    Ok(GridFunction::new(0.0, dx, w.values, Some(w.derivatives))?)
}

/// Stable `G_{q,w}` on `[0, x_max]`.
pub fn compute_g(params: &ModelParams, dx: f64, x_max: f64) -> Result<GridFunction, ScaleError> {
    Ok(solve_scale(params, dx, x_max)?.g)
}

/// Computes `W_q` and `G_{q,w}` together, with diagnostics.
pub fn solve_scale(params: &ModelParams, dx: f64, x_max: f64) -> Result<ScaleSolution, ScaleError> {
    let n = grid_size(params, dx, x_max)?;
    let domain_end = (n - 1) as f64 * dx;
    let kernel = Kernel::new(params, dx, n);
    let w = run(&kernel, 1.0, None)?;
    let w_residual = kernel.residual(&w, None, RESIDUAL_SAMPLES);

    let (g, gamma, g_residual) = if params.penalty.is_zero() {
        (
            March {
                values: vec![0.0; n],
                derivatives: vec![0.0; n],
            },
            0.0,
            0.0,
        )
    } else {
        let omega = params.omega()?;
        let source = (0..n)
            .map(|i| omega.eval(i as f64 * dx).map(|o| -params.lambda * o))
            .collect::<Result<Vec<_>, _>>()?;
        let particular = run(&kernel, 0.0, Some(&source))?;
        let gamma = -particular.values[n - 1] / w.values[n - 1];
        let values: Vec<f64> = particular
            .values
            .iter()
            .zip(&w.values)
            .map(|(gp, wv)| gp + gamma * wv)
            .collect();
        let derivatives: Vec<f64> = particular
            .derivatives
            .iter()
            .zip(&w.derivatives)
            .map(|(gp, wv)| gp + gamma * wv)
            .collect();
        let g = March {
            values,
            derivatives,
        };
        let residual = kernel.residual(&g, Some(&source), RESIDUAL_SAMPLES);
        (g, gamma, residual)
    };

    let max_abs_g = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail_start = n - (n / 10).max(2);
    let slack = 1e-12 * max_abs_g;
    let decaying = g.values[tail_start..]
        .windows(2)
        .all(|p| p[1].abs() <= p[0].abs() + slack);
    if !decaying {
        return Err(ScaleError::TruncationTooShort {
            x_max: domain_end,
            suggested: 2.0 * domain_end,
        });
    }

    let xs = |i: usize| i as f64 * dx;
    let (nonpositive_w_slope, nonpositive_w_slope_count) = flags(
        w.derivatives
            .iter()
            .enumerate()
            .map(|(i, d)| (xs(i), *d <= 0.0)),
    );
    let (nonpositive_one_minus_g_slope, nonpositive_one_minus_g_slope_count) = flags(
        g.derivatives
            .iter()
            .enumerate()
            .map(|(i, d)| (xs(i), 1.0 - d <= 0.0)),
    );
    let diagnostics = ScaleDiagnostics {
        w_residual,
        g_residual,
        max_abs_w: w.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        max_abs_g,
        nonpositive_w_slope,
        nonpositive_w_slope_count,
        nonpositive_one_minus_g_slope,
        nonpositive_one_minus_g_slope_count,
    };

    Ok(ScaleSolution {
        w: GridFunction::new(0.0, dx, w.values, Some(w.derivatives))?,
        g: GridFunction::new(0.0, dx, g.values, Some(g.derivatives))?,
        domain_end,
        stable_coefficient: gamma,
        diagnostics,
        params: params.clone(),
    })
}
