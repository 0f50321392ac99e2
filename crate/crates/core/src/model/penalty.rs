use serde::{Deserialize, Serialize};

use super::ModelError;

/// Penalty `w(y)` paid at ruin as a function of the (negative) deficit `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PenaltyModel {
    Zero,
    /// `w(y) = -k`.
    Constant {
        k: f64,
    },
    /// `w(y) = -k + beta * y` for `y < 0`.
    Linear {
        k: f64,
        beta: f64,
    },
    /// `values[j] = w(-j * dx)`, linearly interpolated and held constant
    /// past the last sample.
    Tabulated {
        dx: f64,
        values: Vec<f64>,
    },
}

impl PenaltyModel {
    pub(crate) fn check(&self) -> Result<(), ModelError> {
        match self {
            PenaltyModel::Zero => {}
            PenaltyModel::Constant { k } => {
                if !(*k >= 0.0 && k.is_finite()) {
                    return Err(ModelError::Penalty(format!(
                        "k must be non-negative, got {k}"
                    )));
                }
            }
            PenaltyModel::Linear { k, beta } => {
                if !(*k >= 0.0 && k.is_finite() && *beta >= 0.0 && beta.is_finite()) {
                    return Err(ModelError::Penalty(format!(
                        "k and beta must be non-negative, got k = {k}, beta = {beta}"
                    )));
                }
            }
            PenaltyModel::Tabulated { dx, values } => {
                if !(*dx > 0.0 && dx.is_finite()) || values.is_empty() {
                    return Err(ModelError::Penalty(
                        "tabulated penalty needs dx > 0 and samples".into(),
                    ));
                }
                if let Some(v) = values.iter().find(|v| !(**v <= 0.0 && v.is_finite())) {
                    return Err(ModelError::Penalty(format!(
                        "penalty samples must be non-positive, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PenaltyModel::Zero => true,
            PenaltyModel::Constant { k } => *k == 0.0,
            PenaltyModel::Linear { k, beta } => *k == 0.0 && *beta == 0.0,
            PenaltyModel::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// `w(y)` for `y < 0` (the value at `y >= 0` is the limit from the left).
    pub fn value(&self, y: f64) -> f64 {
        let y = y.min(0.0);
        match self {
            PenaltyModel::Zero => 0.0,
            PenaltyModel::Constant { k } => -k,
            PenaltyModel::Linear { k, beta } => -k + beta * y,
            PenaltyModel::Tabulated { dx, values } => {
                if values.len() == 1 {
                    return values[0];
                }
                let pos = -y / dx;
                let last = values.len() - 1;
                if pos >= last as f64 {
                    return values[last];
                }
                let i = pos.floor() as usize;
                let t = pos - i as f64;
                values[i] * (1.0 - t) + values[i + 1] * t
            }
        }
    }

    /// Breakpoints of a tabulated penalty as positive deficits.
    pub(crate) fn knots(&self) -> Vec<f64> {
        match self {
            PenaltyModel::Tabulated { dx, values } => {
                (0..values.len()).map(|j| j as f64 * dx).collect()
            }
            _ => Vec::new(),
        }
    }
}
