//! Generator `A` of the risk process and the optimality check of a barrier
//! strategy.

use serde::Serialize;
use thiserror::Error;

use crate::barrier::BarrierSolution;
use crate::model::{ClaimModel, ModelError, ModelParams};
use crate::scale::{GridError, GridFunction};

/// Relative slack when testing `h` for monotonicity above `a*`.
pub const MONOTONE_SLACK: f64 = 1e-9;
/// Residuals up to `RESIDUAL_TOLERANCE * (1 + max|v|)` count as `<= 0`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;
/// The grid must reach this many mean claim sizes beyond `a*`.
pub const REQUIRED_REACH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HjbError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("function carries no derivative data")]
    MissingDerivative,
    #[error(
        "grid ends at {domain_end}, needs at least {required} (a* + {REQUIRED_REACH} mean claims)"
    )]
    GridTooShort { domain_end: f64, required: f64 },
}

/// Values assigned to `m` on the negative half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extension {
    Zero,
    /// `m = w` below zero.
    Penalty,
    Constant(f64),
}

fn point(m: &GridFunction, x: f64) -> Result<(f64, f64), HjbError> {
    let d = m.derivatives().ok_or(HjbError::MissingDerivative)?;
    match m.node_index(x) {
        Some(i) => Ok((m.values()[i], d[i])),
        None => Ok((m.smooth_value_at(x)?, m.smooth_derivative_at(x)?)),
    }
}

fn tail(extension: Extension, params: &ModelParams, x: f64) -> Result<f64, HjbError> {
    Ok(match extension {
        Extension::Zero => 0.0,
        Extension::Penalty => params.omega()?.eval(x)?,
        Extension::Constant(k) => k * params.claim.survival(x),
    })
}

/// `A m(x) = p(x) m'(x) + lambda [int_0^x m(x-y) f(y) dy + int_x^inf m(x-y) f(y) dy - m(x)]`,
/// with trapezoidal quadrature over the grid nodes below `x`.
pub fn generator_apply(
    m: &GridFunction,
    extension: Extension,
    params: &ModelParams,
    x: f64,
) -> Result<f64, HjbError> {
    let (mx, dmx) = point(m, x)?;
    let dx = m.dx();
    let f = |y: f64| params.claim.density(y);
    let last = ((x / dx) + 1e-9).floor() as usize;
    let last = last.min(m.len() - 1);
    let mut conv = 0.0;
    if last > 0 {
        let mut acc = 0.5 * (m.values()[0] * f(x) + m.values()[last] * f(x - m.x_at(last)));
        for j in 1..last {
            acc += m.values()[j] * f(x - m.x_at(j));
        }
        conv = acc * dx;
    }
    let rest = x - m.x_at(last);
    if rest > 1e-9 * dx {
        conv += 0.5 * rest * (m.values()[last] * f(rest) + mx * f(0.0));
    }
    Ok(params.premium.rate(x) * dmx + params.lambda * (conv + tail(extension, params, x)? - mx))
}

/// `(A - q) m` at every node of `m`, with the same trapezoidal quadrature as
/// [`generator_apply`].
pub fn generator_residuals(
    m: &GridFunction,
    extension: Extension,
    params: &ModelParams,
) -> Result<Vec<f64>, HjbError> {
    let d = m.derivatives().ok_or(HjbError::MissingDerivative)?;
    let y = m.values();
    let n = m.len();
    let dx = m.dx();
    let support = params.claim.support_end();
    let f: Vec<f64> = (0..n)
        .map(|k| {
            let z = k as f64 * dx;
            if z > support {
                0.0
            } else {
                params.claim.density(z)
            }
        })
        .collect();
    let reach = f.iter().rposition(|v| *v != 0.0).unwrap_or(0);
    let omega = params.omega()?;
    // exponential density: sum_j y_j f_{i-j} = mu S_i with S_i = y_i + r S_{i-1}
    let decay = match params.claim {
        ClaimModel::Exponential { mu } => Some((mu, (-mu * dx).exp())),
        ClaimModel::Tabulated { .. } => None,
    };
    let mut running = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = m.x_at(i);
        let acc = match decay {
            Some((mu, r)) => {
                running = y[i] + r * running;
                mu * running
            }
            None => {
                let lo = i.saturating_sub(reach);
                (lo..=i).map(|j| y[j] * f[i - j]).sum()
            }
        };
        let conv = if i > 0 {
            dx * (acc - 0.5 * (y[i] * f[0] + y[0] * f[i]))
        } else {
            0.0
        };
        let t = match extension {
            Extension::Zero => 0.0,
            Extension::Penalty => omega.eval(x)?,
            Extension::Constant(k) => k * params.claim.survival(x),
        };
        out.push(
            params.premium.rate(x) * d[i] + params.lambda * (conv + t - y[i]) - params.q * y[i],
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    pub a_star: f64,
    /// `(A - q) v_{a*}` at the grid nodes above `a*`.
    #[serde(skip)]
    pub residual_profile: GridFunction,
    pub max_residual_above: f64,
    /// Largest `|(A - q) v|` on `[0, a*]`; a sanity band, not a gate.
    pub max_abs_residual_below: f64,
    pub tolerance: f64,
    pub necessary_sufficient_pass: bool,
    /// `h` non-increasing above `a*`.
    pub thm_h_monotone_pass: Option<bool>,
    /// `f` convex and `p` concave.
    pub thm_convex_concave_pass: Option<bool>,
    /// `f` decreasing and `p' <= q + lambda` above `a*`; zero penalty only.
    pub thm_decreasing_density_pass: Option<bool>,
    /// `v >= 0` on the grid; checked for zero penalty only.
    pub value_nonnegative: Option<bool>,
}

impl OptimalityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }
}

/// Checks `(A - q) v_{a*} <= 0` above `a*` and the three sufficient
/// conditions.
pub fn verify_optimality(
    solution: &BarrierSolution,
    params: &ModelParams,
) -> Result<OptimalityReport, HjbError> {
    let v = &solution.v;
    let a = solution.a_star;
    let required = a + REQUIRED_REACH * params.mean_claim();
    if v.x_end() < required {
        return Err(HjbError::GridTooShort {
            domain_end: v.x_end(),
            required,
        });
    }
    let residuals = generator_residuals(v, Extension::Penalty, params)?;
    let first_above = v.xs().position(|x| x > a).expect("grid reaches past a*");
    let above = residuals[first_above..].to_vec();
    let max_residual_above = above.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_abs_residual_below = residuals[..first_above]
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    let tolerance = RESIDUAL_TOLERANCE * (1.0 + v.max_abs());
    let residual_profile = GridFunction::new(v.x_at(first_above), v.dx(), above, None)?;

    let h = solution.h_profile.values();
    let h_scale = MONOTONE_SLACK * solution.h_max.abs().max(1.0);
    let start = solution
        .h_profile
        .xs()
        .position(|x| x >= a)
        .unwrap_or(h.len() - 1);
    let monotone = h[start..].windows(2).all(|w| w[1] <= w[0] + h_scale);

    let convex_concave = params.claim.is_convex() && params.premium.is_concave();

    let zero_penalty = params.penalty.is_zero();
    let decreasing = zero_penalty.then(|| {
        params.claim.is_decreasing()
            && v.xs()
                .filter(|x| *x >= a)
                .all(|x| params.premium.slope(x) <= params.q + params.lambda)
    });
    let value_nonnegative = zero_penalty.then(|| v.values().iter().all(|x| *x >= 0.0));

    Ok(OptimalityReport {
        a_star: a,
        residual_profile,
        max_residual_above,
        max_abs_residual_below,
        tolerance,
        necessary_sufficient_pass: max_residual_above <= tolerance,
        thm_h_monotone_pass: Some(monotone),
        thm_convex_concave_pass: Some(convex_concave),
        thm_decreasing_density_pass: decreasing,
        value_nonnegative,
    })
}
