//! Problem instances: premium, claim and penalty families plus the rates
//! `lambda` (claim intensity) and `q` (discounting).

mod claim;
mod penalty;
mod premium;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::integrate;

pub use claim::{ClaimModel, DENSITY_MASS_TOL};
pub use penalty::PenaltyModel;
pub use premium::PremiumModel;
pub use validate::{validate_model, CheckOutcome, SpeedFit, ValidationReport};

/// Absolute tolerance used for `omega` quadrature.
pub const OMEGA_ABS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid premium: {0}")]
    Premium(String),
    #[error("invalid claim model: {0}")]
    Claim(String),
    #[error("invalid penalty: {0}")]
    Penalty(String),
    #[error("invalid rate: {0}")]
    Rate(String),
    #[error("malformed model document: {0}")]
    Parse(String),
    #[error("quadrature did not converge at x = {x} (error estimate {estimate:e})")]
    Quadrature { x: f64, estimate: f64 },
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub premium: PremiumModel,
    pub claim: ClaimModel,
    pub penalty: PenaltyModel,
    pub lambda: f64,
    pub q: f64,
}

impl ModelParams {
    /// Builds and structurally checks an instance.
    pub fn new(
        premium: PremiumModel,
        claim: ClaimModel,
        penalty: PenaltyModel,
        lambda: f64,
        q: f64,
    ) -> Result<Self, ModelError> {
        let params = Self {
            premium,
            claim,
            penalty,
            lambda,
            q,
        };
        params.check()?;
        Ok(params)
    }

    /// Parses the JSON model document and checks it.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let params: Self =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        params.check()?;
        Ok(params)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model params always serialize")
    }

    /// Structural well-formedness: parameter signs, sample positivity,
    /// density normalization.
    pub fn check(&self) -> Result<(), ModelError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ModelError::Rate(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(ModelError::Rate(format!(
                "q must be non-negative, got {}",
                self.q
            )));
        }
        self.premium.check()?;
        self.claim.check()?;
        self.penalty.check()?;
        if !self.claim.mean().is_finite() {
            return Err(ModelError::Claim("claim mean must be finite".into()));
        }
        Ok(())
    }

    pub fn mean_claim(&self) -> f64 {
        self.claim.mean()
    }

    /// Precomputes what is needed to evaluate `omega` repeatedly.
    pub fn omega(&self) -> Result<Omega<'_>, ModelError> {
        Omega::new(self)
    }

    /// `sup_{y >= 0} E[-w(y - C) | C > y]`.
    pub fn penalty_envelope(&self) -> Result<f64, ModelError> {
        if self.penalty.is_zero() {
            return Ok(0.0);
        }
        if let PenaltyModel::Constant { k } = self.penalty {
            return Ok(k);
        }
        let omega = self.omega()?;
        if let ClaimModel::Exponential { .. } = self.claim {
            // memoryless: the conditional deficit law does not depend on y
            return Ok(-omega.eval(0.0)?);
        }
        let end = self.claim.support_end();
        let mut sup = 0.0f64;
        let n = 400;
        for i in 0..n {
            let y = end * i as f64 / n as f64;
            let s = self.claim.survival(y);
            if s < 1e-10 {
                break;
            }
            sup = sup.max(-omega.eval(y)? / s);
        }
        Ok(sup)
    }
}

/// `omega(x) = int_x^inf w(x - z) dF(z)`, the expected penalty of a claim
/// that overshoots level `x`.
pub fn omega_eval(params: &ModelParams, x: f64) -> Result<f64, ModelError> {
    params.omega()?.eval(x)
}

#[derive(Debug, Clone)]
enum OmegaKind {
    Zero,
    /// `omega(x) = scale * exp(-mu x)` for exponential claims.
    Exponential {
        mu: f64,
        scale: f64,
    },
    General,
}

/// Reusable `omega` evaluator.
#[derive(Debug, Clone)]
pub struct Omega<'a> {
    params: &'a ModelParams,
    kind: OmegaKind,
}

impl<'a> Omega<'a> {
    fn new(params: &'a ModelParams) -> Result<Self, ModelError> {
        let penalty = &params.penalty;
        if penalty.is_zero() {
            return Ok(Self {
                params,
                kind: OmegaKind::Zero,
            });
        }
        let kind = match params.claim {
            ClaimModel::Exponential { mu } => {
                // omega(x) = exp(-mu x) * int_0^inf w(-t) mu exp(-mu t) dt
                let scale = match *penalty {
                    PenaltyModel::Zero => 0.0,
                    PenaltyModel::Constant { k } => -k,
                    PenaltyModel::Linear { k, beta } => -(k + beta / mu),
                    PenaltyModel::Tabulated { dx, ref values } => {
                        let span = dx * (values.len() - 1) as f64;
                        let mut acc = 0.0;
                        let mut err = 0.0;
                        for j in 0..values.len().saturating_sub(1) {
                            let (lo, hi) = (j as f64 * dx, (j + 1) as f64 * dx);
                            let r = integrate(
                                |t| penalty.value(-t) * mu * (-mu * t).exp(),
                                lo,
                                hi,
                                1e-13,
                                1e-13,
                            );
                            acc += r.value;
                            err += r.error;
                        }
                        if err > OMEGA_ABS_TOL {
                            return Err(ModelError::Quadrature {
                                x: 0.0,
                                estimate: err,
                            });
                        }
                        acc + values[values.len() - 1] * (-mu * span).exp()
                    }
                };
                OmegaKind::Exponential { mu, scale }
            }
            ClaimModel::Tabulated { .. } => OmegaKind::General,
        };
        Ok(Self { params, kind })
    }

    pub fn eval(&self, x: f64) -> Result<f64, ModelError> {
        match self.kind {
            OmegaKind::Zero => Ok(0.0),
            OmegaKind::Exponential { mu, scale } => Ok(scale * (-mu * x.max(0.0)).exp()),
            OmegaKind::General => self.general(x.max(0.0)),
        }
    }

    fn general(&self, x: f64) -> Result<f64, ModelError> {
        let claim = &self.params.claim;
        let penalty = &self.params.penalty;
        if let PenaltyModel::Constant { k } = *penalty {
            return Ok(-k * claim.survival(x));
        }
        let end = claim.support_end();
        if x >= end {
            return Ok(0.0);
        }
        let mut breaks: Vec<f64> = claim
            .knots()
            .into_iter()
            .filter(|z| *z > x && *z < end)
            .collect();
        breaks.extend(
            penalty
                .knots()
                .into_iter()
                .map(|d| x + d)
                .filter(|z| *z > x && *z < end),
        );
        breaks.push(x);
        breaks.push(end);
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut acc = 0.0;
        let mut err = 0.0;
        let share = OMEGA_ABS_TOL / breaks.len() as f64;
        for w in breaks.windows(2) {
            let r = integrate(
                |z| penalty.value(x - z) * claim.density(z),
                w[0],
                w[1],
                share,
                0.0,
            );
            acc += r.value;
            err += r.error;
        }
        if err > OMEGA_ABS_TOL {
            return Err(ModelError::Quadrature { x, estimate: err });
        }
        Ok(acc.min(0.0))
    }
}
