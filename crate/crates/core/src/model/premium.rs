use serde::{Deserialize, Serialize};

use super::ModelError;

/// Premium income rate `p(x)` as a function of the current surplus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PremiumModel {
    /// `p(x) = c`.
    Constant { c: f64 },
    /// `p(x) = c + epsilon * x` (interest earned on reserves).
    Linear { c: f64, epsilon: f64 },
    /// `p(x) = c + 1 / (1 + x)`.
    Rational { c: f64 },
    /// Uniformly spaced `(x, p(x))` samples starting at `x = 0`, linearly
    /// interpolated. Evaluation past the last sample is undefined.
    Tabulated { points: Vec<[f64; 2]> },
}

impl PremiumModel {
    pub(crate) fn check(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Premium(msg));
        match *self {
            PremiumModel::Constant { c } | PremiumModel::Rational { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("c must be positive and finite, got {c}"));
                }
            }
            PremiumModel::Linear { c, epsilon } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("c must be positive and finite, got {c}"));
                }
                if !(epsilon >= 0.0 && epsilon.is_finite()) {
                    return bad(format!("epsilon must be non-negative, got {epsilon}"));
                }
            }
            PremiumModel::Tabulated { ref points } => {
                if points.len() < 2 {
                    return bad("tabulated premium needs at least two samples".into());
                }
                if points[0][0] != 0.0 {
                    return bad(format!(
                        "tabulated premium must start at x = 0, got {}",
                        points[0][0]
                    ));
                }
                let step = points[1][0] - points[0][0];
                if !(step > 0.0) {
                    return bad("tabulated premium abscissae must be increasing".into());
                }
                for (i, pt) in points.iter().enumerate() {
                    let expected = i as f64 * step;
                    if (pt[0] - expected).abs() > 1e-9 * step.max(expected) {
                        return bad(format!(
                            "tabulated premium grid is not uniform at index {i}"
                        ));
                    }
                    if !(pt[1] > 0.0 && pt[1].is_finite()) {
                        return bad(format!(
                            "non-positive premium sample p({}) = {}",
                            pt[0], pt[1]
                        ));
                    }
                }
                let increasing = points.windows(2).all(|w| w[1][1] >= w[0][1]);
                let decreasing = points.windows(2).all(|w| w[1][1] <= w[0][1]);
                if !(increasing || decreasing) {
                    return bad("tabulated premium samples are not monotone".into());
                }
            }
        }
        Ok(())
    }

    /// Largest surplus level at which `p` is defined.
    pub fn domain_end(&self) -> f64 {
        match self {
            PremiumModel::Tabulated { points } => points[points.len() - 1][0],
            _ => f64::INFINITY,
        }
    }

    fn table_step(points: &[[f64; 2]]) -> f64 {
        points[1][0] - points[0][0]
    }

    /// `p(x)`. Returns NaN outside the domain of a tabulated premium.
    pub fn rate(&self, x: f64) -> f64 {
        match *self {
            PremiumModel::Constant { c } => c,
            PremiumModel::Linear { c, epsilon } => c + epsilon * x,
            PremiumModel::Rational { c } => c + 1.0 / (1.0 + x),
            PremiumModel::Tabulated { ref points } => {
                let h = Self::table_step(points);
                let end = self.domain_end();
                if !(0.0..=end * (1.0 + 1e-12)).contains(&x) {
                    return f64::NAN;
                }
                let pos = (x / h).min((points.len() - 1) as f64);
                let i = (pos.floor() as usize).min(points.len() - 2);
                let t = pos - i as f64;
                points[i][1] * (1.0 - t) + points[i + 1][1] * t
            }
        }
    }

    /// `p'(x)`; for tabulated premiums the right-hand slope of the segment.
    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            PremiumModel::Constant { .. } => 0.0,
            PremiumModel::Linear { epsilon, .. } => epsilon,
            PremiumModel::Rational { .. } => -1.0 / ((1.0 + x) * (1.0 + x)),
            PremiumModel::Tabulated { ref points } => {
                let h = Self::table_step(points);
                let i = ((x / h).floor().max(0.0) as usize).min(points.len() - 2);
                (points[i + 1][1] - points[i][1]) / h
            }
        }
    }

    /// Whether `p` is concave on `[0, domain_end]`.
    pub fn is_concave(&self) -> bool {
        match self {
            PremiumModel::Constant { .. } | PremiumModel::Linear { .. } => true,
            PremiumModel::Rational { .. } => false,
            PremiumModel::Tabulated { points } => {
                let scale = points.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
                points
                    .windows(3)
                    .all(|w| w[2][1] - 2.0 * w[1][1] + w[0][1] <= 1e-12 * scale)
            }
        }
    }

    /// Largest value of `p` on `[0, x]`.
    pub fn max_on(&self, x: f64) -> f64 {
        match self {
            PremiumModel::Constant { c } => *c,
            PremiumModel::Linear { .. } => self.rate(x),
            PremiumModel::Rational { .. } => self.rate(0.0),
            PremiumModel::Tabulated { points } => points
                .iter()
                .filter(|p| p[0] <= x)
                .map(|p| p[1])
                .fold(self.rate(x.min(self.domain_end())), f64::max),
        }
    }
}
