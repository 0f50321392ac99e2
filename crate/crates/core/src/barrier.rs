//! Barrier quality `h(y) = (1 - G'(y)) / W'(y)`, the optimal level `a*`
//! and the value function `v_a` of the barrier strategy.

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, ModelParams};
use crate::numerics::{golden_section_max, integrate};
use crate::scale::{GridError, GridFunction, ScaleSolution};

/// Grid maxima within this fraction of `|h_max|` count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Final golden-section bracket width.
pub const REFINEMENT_WIDTH: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BarrierError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("W'({x}) = {slope} is not positive; h is undefined")]
    Degenerate { x: f64, slope: f64 },
    #[error("h peaks at the last grid node x = {x_end}; enlarge x_max or override")]
    DomainTooShort { x_end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BarrierOptions {
    /// Accept a maximum at the right edge of the grid (with a warning).
    pub allow_edge_maximum: bool,
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub a_star: f64,
    pub h_profile: GridFunction,
    /// `v_{a*}` on the scale grid, linear with slope 1 past `a*`.
    pub v: GridFunction,
    pub v_at_barrier: f64,
    pub refinement_width: f64,
    /// `v'(a*-) - 1` from a one-sided second-order difference.
    pub smooth_pasting_residual: f64,
    pub h_max: f64,
    pub warnings: Vec<String>,
    pub scale: ScaleSolution,
}

/// JSON view of a [`BarrierSolution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierSummary {
    pub a_star: f64,
    pub v_at_barrier: f64,
    pub smooth_pasting_residual: f64,
    pub refinement_width: f64,
    pub h_max: f64,
    pub dx: f64,
    pub domain_end: f64,
    pub warnings: Vec<String>,
}

impl BarrierSolution {
    pub fn summary(&self) -> BarrierSummary {
        BarrierSummary {
            a_star: self.a_star,
            v_at_barrier: self.v_at_barrier,
            smooth_pasting_residual: self.smooth_pasting_residual,
            refinement_width: self.refinement_width,
            h_max: self.h_max,
            dx: self.v.dx(),
            domain_end: self.scale.domain_end,
            warnings: self.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("summary always serializes")
    }

    /// `v_{a*}(x)` for any `x >= 0`, past the grid included.
    pub fn value(&self, x: f64) -> Result<f64, BarrierError> {
        value_function(&self.scale, self.a_star, x)
    }
}

fn slopes(scale: &ScaleSolution, y: f64) -> Result<(f64, f64), BarrierError> {
    match scale.w.node_index(y) {
        Some(i) => Ok((
            scale.w.derivatives().unwrap()[i],
            scale.g.derivatives().unwrap()[i],
        )),
        None => Ok((
            scale.w.cubic_derivative_at(y)?,
            scale.g.cubic_derivative_at(y)?,
        )),
    }
}

fn values(scale: &ScaleSolution, x: f64) -> Result<(f64, f64), BarrierError> {
    match scale.w.node_index(x) {
        Some(i) => Ok((scale.w.values()[i], scale.g.values()[i])),
        None => Ok((scale.w.smooth_value_at(x)?, scale.g.smooth_value_at(x)?)),
    }
}

/// `h(y) = (1 - G'(y)) / W'(y)`. Off-grid slopes interpolate the node
/// derivatives with four-point cubics.
pub fn h_eval(scale: &ScaleSolution, y: f64) -> Result<f64, BarrierError> {
    let (dw, dg) = slopes(scale, y)?;
    if !(dw > 0.0) {
        return Err(BarrierError::Degenerate { x: y, slope: dw });
    }
    Ok((1.0 - dg) / dw)
}

/// `v_a(x) = W(x) h(a) + G(x)` for `x <= a` and `x - a + v_a(a)` above.
pub fn value_function(scale: &ScaleSolution, a: f64, x: f64) -> Result<f64, BarrierError> {
    let ha = h_eval(scale, a)?;
    let at = |z: f64| -> Result<f64, BarrierError> {
        let (w, g) = values(scale, z)?;
        Ok(w * ha + g)
    };
    if x <= a {
        at(x.max(0.0))
    } else {
        Ok(x - a + at(a)?)
    }
}

/// `v_a'(x)`; equals 1 above `a`.
pub fn value_derivative(scale: &ScaleSolution, a: f64, x: f64) -> Result<f64, BarrierError> {
    if x > a {
        return Ok(1.0);
    }
    let ha = h_eval(scale, a)?;
    let (dw, dg) = slopes(scale, x.max(0.0))?;
    Ok(dw * ha + dg)
}

/// Residual of
/// `0 = -(lambda+q) v(a) + lambda int_0^a v(a-z) f(z) dz + lambda omega(a) + p(a)`
/// for the assembled `v_a`.
pub fn barrier_boundary_identity(scale: &ScaleSolution, a: f64) -> Result<f64, BarrierError> {
    let ha = h_eval(scale, a)?;
    let mut failure = None;
    let v = |x: f64| match values(scale, x) {
        Ok((w, g)) => w * ha + g,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let r = boundary_identity_with(&scale.params, a, v)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// [`barrier_boundary_identity`] for an arbitrary candidate `v` on `[0, a]`.
pub fn boundary_identity_with<V: FnMut(f64) -> f64>(
    params: &ModelParams,
    a: f64,
    mut v: V,
) -> Result<f64, BarrierError> {
    let lambda = params.lambda;
    let va = v(a);
    let samples: std::cell::RefCell<&mut V> = std::cell::RefCell::new(&mut v);
    let integrand = |z: f64| (samples.borrow_mut())(a - z) * params.claim.density(z);
    let conv = if a > 0.0 {
        // short pieces keep the adaptive rule away from the interpolation kinks
        let pieces = (a / 0.5).ceil().max(1.0) as usize;
        let h = a / pieces as f64;
        (0..pieces)
            .map(|k| {
                integrate(
                    integrand,
                    k as f64 * h,
                    ((k + 1) as f64 * h).min(a),
                    1e-12,
                    1e-12,
                )
                .value
            })
            .sum()
    } else {
        0.0
    };
    let omega = params.omega()?.eval(a)?;
    Ok(-(lambda + params.q) * va + lambda * conv + lambda * omega + params.premium.rate(a))
}

/// Vertex of the parabola through three points of the final bracket, kept
/// only if it stays inside and does not lower `h`.
fn polish<F: Fn(f64) -> f64>(h: F, x: f64, width: f64, value: f64) -> (f64, f64) {
    let d = 0.5 * width;
    if d <= 0.0 {
        return (x, value);
    }
    let (lo, hi) = (h(x - d), h(x + d));
    let curvature = lo - 2.0 * value + hi;
    if !(curvature < 0.0) || (lo.max(hi) - value.min(lo).min(hi)).abs() < 1e-12 * value.abs() {
        return (x, value);
    }
    let vertex = x + 0.5 * d * (lo - hi) / curvature;
    if (vertex - x).abs() > d {
        return (x, value);
    }
    let hv = h(vertex);
    if hv >= value {
        (vertex, hv)
    } else {
        (x, value)
    }
}

/// Locates `a*`, the largest global maximizer of `h`, and assembles `v_{a*}`.
pub fn find_barrier(scale: &ScaleSolution) -> Result<BarrierSolution, BarrierError> {
    find_barrier_with(scale, BarrierOptions::default())
}

pub fn find_barrier_with(
    scale: &ScaleSolution,
    options: BarrierOptions,
) -> Result<BarrierSolution, BarrierError> {
    let w = &scale.w;
    let dw = w.derivatives().ok_or(GridError::NoDerivative)?;
    let dg = scale.g.derivatives().ok_or(GridError::NoDerivative)?;
    let n = w.len();
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        if !(dw[i] > 0.0) {
            return Err(BarrierError::Degenerate {
                x: w.x_at(i),
                slope: dw[i],
            });
        }
        h.push((1.0 - dg[i]) / dw[i]);
    }
    let h_max = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tie = TIE_TOLERANCE * h_max.abs();
    let top = h
        .iter()
        .rposition(|v| *v >= h_max - tie)
        .expect("non-empty grid");

    let mut warnings = Vec::new();
    let (a_star, width) = if top == 0 {
        (0.0, 0.0)
    } else if top == n - 1 {
        if !options.allow_edge_maximum {
            return Err(BarrierError::DomainTooShort { x_end: w.x_end() });
        }
        warnings.push(format!(
            "h peaks at the last grid node {}; the domain is likely too short",
            w.x_end()
        ));
        (w.x_end(), 0.0)
    } else {
        let (lo, hi) = (w.x_at(top - 1), w.x_at(top + 1));
        let h_at = |y: f64| h_eval(scale, y).unwrap_or(f64::NEG_INFINITY);
        let r = golden_section_max(h_at, lo, hi, REFINEMENT_WIDTH);
        let (x, value) = polish(h_at, r.x, r.width, r.value);
        if value >= h[top] {
            (x, r.width)
        } else {
            (w.x_at(top), r.width)
        }
    };
    let mut solution = barrier_solution_at(scale, a_star)?;
    solution.refinement_width = width;
    solution.h_max = h_max.max(solution.h_max);
    solution.warnings = warnings;
    Ok(solution)
}

/// Assembles the barrier solution for an arbitrary level `a` on the grid.
pub fn barrier_solution_at(scale: &ScaleSolution, a: f64) -> Result<BarrierSolution, BarrierError> {
    let w = &scale.w;
    let dw = w.derivatives().ok_or(GridError::NoDerivative)?;
    let dg = scale.g.derivatives().ok_or(GridError::NoDerivative)?;
    let n = w.len();
    let h_star = h_eval(scale, a)?;
    let mut h = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut dv = Vec::with_capacity(n);
    let v_at_barrier = value_function(scale, a, a)?;
    for i in 0..n {
        let x = w.x_at(i);
        h.push((1.0 - dg[i]) / dw[i]);
        if x <= a {
            v.push(w.values()[i] * h_star + scale.g.values()[i]);
            dv.push(dw[i] * h_star + dg[i]);
        } else {
            v.push(x - a + v_at_barrier);
            dv.push(1.0);
        }
    }

    let smooth_pasting_residual = if a >= 2.0 * w.dx() {
        let d = w.dx();
        let at = |x: f64| value_function(scale, a, x);
        (3.0 * at(a)? - 4.0 * at(a - d)? + at(a - 2.0 * d)?) / (2.0 * d) - 1.0
    } else {
        value_derivative(scale, a, a)? - 1.0
    };

    Ok(BarrierSolution {
        a_star: a,
        h_profile: GridFunction::new(0.0, w.dx(), h, None)?,
        v: GridFunction::new(0.0, w.dx(), v, Some(dv))?,
        v_at_barrier,
        refinement_width: 0.0,
        smooth_pasting_residual,
        h_max: h_star,
        warnings: Vec::new(),
        scale: scale.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClaimModel, PenaltyModel, PremiumModel};
    use crate::scale::solve_scale;

    fn linear(q: f64, penalty: PenaltyModel) -> ScaleSolution {
        let p = ModelParams::new(
            PremiumModel::Linear {
                c: 1.0,
                epsilon: 0.02,
            },
            ClaimModel::Exponential { mu: 0.3 },
            penalty,
            0.1,
            q,
        )
        .unwrap();
        solve_scale(&p, 0.01, 120.0).unwrap()
    }

    #[test]
    fn h_at_zero_constant_premium() {
        let p = ModelParams::new(
            PremiumModel::Constant { c: 1.0 },
            ClaimModel::Exponential { mu: 0.3 },
            PenaltyModel::Zero,
            0.1,
            0.05,
        )
        .unwrap();
        let s = solve_scale(&p, 0.01, 50.0).unwrap();
        assert!((h_eval(&s, 0.0).unwrap() - 1.0 / 0.15).abs() < 1e-12);
        assert!(h_eval(&s, 51.0).is_err());
    }

    #[test]
    fn table_one_column() {
        let s = linear(0.025, PenaltyModel::Zero);
        let b = find_barrier(&s).unwrap();
        assert!((b.a_star - 17.82).abs() < 0.1, "{}", b.a_star);
        assert!(b.refinement_width <= REFINEMENT_WIDTH);
        assert!(b.smooth_pasting_residual.abs() <= 1e-3);
        for (x, hv) in b.h_profile.xs().zip(b.h_profile.values()) {
            assert!(*hv <= b.h_max, "{x}");
        }
    }

    #[test]
    fn value_function_branches() {
        let s = linear(0.05, PenaltyModel::Constant { k: 1.0 });
        let b = find_barrier(&s).unwrap();
        let a = b.a_star;
        let va = value_function(&s, a, a).unwrap();
        assert!((value_function(&s, a, a + 3.0).unwrap() - va - 3.0).abs() < 1e-12);
        assert!((value_derivative(&s, a, a).unwrap() - 1.0).abs() < 1e-12);
        let d = b.v.derivatives().unwrap();
        for (x, dv) in b.v.xs().zip(d) {
            if x <= a {
                assert!(*dv >= 1.0 - 1e-6, "x = {x}: {dv}");
            }
        }
    }

    #[test]
    fn boundary_identity_holds_and_is_linear() {
        let s = linear(0.05, PenaltyModel::Constant { k: 1.0 });
        let b = find_barrier(&s).unwrap();
        let a = b.a_star;
        let r = barrier_boundary_identity(&s, a).unwrap();
        assert!(r.abs() <= 1e-5 * s.params.premium.rate(a), "{r}");
        let base = |x: f64| value_function(&s, a, x).unwrap();
        let bumped =
            boundary_identity_with(&s.params, a, |x| base(x) + if x == a { 1e-3 } else { 0.0 })
                .unwrap();
        let plain = boundary_identity_with(&s.params, a, base).unwrap();
        assert!(((plain - bumped) - 0.15e-3).abs() < 1e-12);
    }

    #[test]
    fn largest_maximizer_and_edge() {
        // a* is near 17.8, so a grid cut at 10 peaks at its last node
        let s = linear(0.025, PenaltyModel::Zero);
        let short = GridFunction::new(
            0.0,
            0.01,
            s.w.values()[..1001].to_vec(),
            Some(s.w.derivatives().unwrap()[..1001].to_vec()),
        )
        .unwrap();
        let g = GridFunction::new(0.0, 0.01, vec![0.0; 1001], Some(vec![0.0; 1001])).unwrap();
        let mut cut = s.clone();
        cut.w = short;
        cut.g = g;
        cut.domain_end = 10.0;
        assert!(matches!(
            find_barrier(&cut),
            Err(BarrierError::DomainTooShort { .. })
        ));
        let b = find_barrier_with(
            &cut,
            BarrierOptions {
                allow_edge_maximum: true,
            },
        )
        .unwrap();
        assert_eq!(b.a_star, 10.0);
        assert_eq!(b.warnings.len(), 1);
    }

    #[test]
    fn summary_json_fields() {
        let b = find_barrier(&linear(0.05, PenaltyModel::Zero)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        for key in ["a_star", "v_at_barrier", "smooth_pasting_residual"] {
            assert!(v.get(key).is_some());
        }
    }
}
