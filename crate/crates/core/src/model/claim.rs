use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Tolerance on the total mass of a tabulated density.
pub const DENSITY_MASS_TOL: f64 = 1e-8;

/// Claim size distribution. Claims are positive with an absolutely
/// continuous law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClaimModel {
    /// `f(y) = mu * exp(-mu * y)`.
    Exponential { mu: f64 },
    /// Density samples `density[k] = f(k * dx)`, linearly interpolated and
    /// zero past the last sample.
    Tabulated { dx: f64, density: Vec<f64> },
}

impl ClaimModel {
    pub(crate) fn check(&self) -> Result<(), ModelError> {
        match self {
            ClaimModel::Exponential { mu } => {
                if !(*mu > 0.0 && mu.is_finite()) {
                    return Err(ModelError::Claim(format!("mu must be positive, got {mu}")));
                }
            }
            ClaimModel::Tabulated { dx, density } => {
                if !(*dx > 0.0 && dx.is_finite()) {
                    return Err(ModelError::Claim(format!("dx must be positive, got {dx}")));
                }
                if density.len() < 2 {
                    return Err(ModelError::Claim(
                        "tabulated density needs at least two samples".into(),
                    ));
                }
                if let Some(bad) = density.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                    return Err(ModelError::Claim(format!(
                        "negative or non-finite density sample {bad}"
                    )));
                }
                let mass = self.cdf(f64::INFINITY);
                if (mass - 1.0).abs() > DENSITY_MASS_TOL {
                    return Err(ModelError::Claim(format!(
                        "tabulated density integrates to {mass}, expected 1 within {DENSITY_MASS_TOL:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Density `f(y)`; zero for `y < 0`.
    pub fn density(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        match self {
            ClaimModel::Exponential { mu } => mu * (-mu * y).exp(),
            ClaimModel::Tabulated { dx, density } => {
                let pos = y / dx;
                let last = (density.len() - 1) as f64;
                if pos > last {
                    return 0.0;
                }
                let i = (pos.floor() as usize).min(density.len() - 2);
                let t = pos - i as f64;
                density[i] * (1.0 - t) + density[i + 1] * t
            }
        }
    }

    /// Distribution function `F(y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self {
            ClaimModel::Exponential { mu } => -(-mu * y).exp_m1(),
            ClaimModel::Tabulated { dx, density } => {
                let mut acc = 0.0;
                let full = ((y / dx).floor() as usize).min(density.len() - 1);
                for k in 0..full {
                    acc += 0.5 * dx * (density[k] + density[k + 1]);
                }
                if full < density.len() - 1 {
                    let t = y - full as f64 * dx;
                    let f0 = density[full];
                    let slope = (density[full + 1] - f0) / dx;
                    acc += f0 * t + 0.5 * slope * t * t;
                }
                acc
            }
        }
    }

    /// Tail `1 - F(y)`, computed without cancellation for exponential claims.
    pub fn survival(&self, y: f64) -> f64 {
        match self {
            ClaimModel::Exponential { mu } => {
                if y <= 0.0 {
                    1.0
                } else {
                    (-mu * y).exp()
                }
            }
            ClaimModel::Tabulated { .. } => (1.0 - self.cdf(y)).max(0.0),
        }
    }

    /// Mean claim size. Trapezoidal on the density grid for tabulated claims.
    pub fn mean(&self) -> f64 {
        match self {
            ClaimModel::Exponential { mu } => 1.0 / mu,
            ClaimModel::Tabulated { dx, density } => {
                let n = density.len();
                let mut acc = 0.0;
                for k in 0..n {
                    let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                    acc += w * (k as f64 * dx) * density[k];
                }
                acc * dx
            }
        }
    }

    /// Right end of the support (infinite for exponential claims).
    pub fn support_end(&self) -> f64 {
        match self {
            ClaimModel::Exponential { .. } => f64::INFINITY,
            ClaimModel::Tabulated { dx, density } => (density.len() - 1) as f64 * dx,
        }
    }

    /// Sampled breakpoints of a tabulated density (empty for closed forms).
    pub(crate) fn knots(&self) -> Vec<f64> {
        match self {
            ClaimModel::Exponential { .. } => Vec::new(),
            ClaimModel::Tabulated { dx, density } => {
                (0..density.len()).map(|k| k as f64 * dx).collect()
            }
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            ClaimModel::Exponential { .. } => true,
            ClaimModel::Tabulated { density, .. } => {
                let scale = density.iter().cloned().fold(0.0, f64::max);
                density
                    .windows(3)
                    .all(|w| w[2] - 2.0 * w[1] + w[0] >= -1e-12 * scale)
            }
        }
    }

    pub fn is_decreasing(&self) -> bool {
        match self {
            ClaimModel::Exponential { .. } => true,
            ClaimModel::Tabulated { density, .. } => density.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    pub fn vanishes_at_zero(&self) -> bool {
        self.density(0.0) == 0.0
    }

    /// Draws one claim size by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>();
        match self {
            ClaimModel::Exponential { mu } => -(-u).ln_1p() / mu,
            ClaimModel::Tabulated { dx, density } => {
                let total = self.cdf(f64::INFINITY);
                let target = u * total;
                let mut acc = 0.0;
                for k in 0..density.len() - 1 {
                    let seg = 0.5 * dx * (density[k] + density[k + 1]);
                    if acc + seg >= target {
                        let r = target - acc;
                        let f0 = density[k];
                        let slope = (density[k + 1] - f0) / dx;
                        // solve f0 t + slope t^2 / 2 = r on [0, dx]
                        let t = if slope.abs() < 1e-14 {
                            if f0 > 0.0 {
                                r / f0
                            } else {
                                0.0
                            }
                        } else {
                            let disc = (f0 * f0 + 2.0 * slope * r).max(0.0);
                            2.0 * r / (f0 + disc.sqrt())
                        };
                        return k as f64 * dx + t.clamp(0.0, *dx);
                    }
                    acc += seg;
                }
                self.support_end()
            }
        }
    }
}
