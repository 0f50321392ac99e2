//! Linear ODE form of the scale equation for claims with rational Laplace
//! transform.

use thiserror::Error;

use crate::model::{ClaimModel, PremiumModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LodeError {
    #[error("invalid operator: {0}")]
    Invalid(String),
    #[error("order m = {0} is representable but not executable")]
    Unsupported(usize),
}

/// Claim-side operator `L(x) = x^m + beta_{m-1} x^{m-1} + ... + beta_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LodeOperatorSpec {
    m: usize,
    beta: Vec<f64>,
}

impl LodeOperatorSpec {
    pub fn new(m: usize, beta: Vec<f64>) -> Result<Self, LodeError> {
        if m == 0 {
            return Err(LodeError::Invalid("order must be positive".into()));
        }
        if beta.len() != m {
            return Err(LodeError::Invalid(format!(
                "expected {m} coefficients, got {}",
                beta.len()
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(LodeError::Invalid("non-finite coefficient".into()));
        }
        Ok(Self { m, beta })
    }

    /// Exponential claims give `L(x) = x + mu`.
    pub fn for_claim(claim: &ClaimModel) -> Result<Self, LodeError> {
        match claim {
            ClaimModel::Exponential { mu } => Self::new(1, vec![*mu]),
            ClaimModel::Tabulated { .. } => Err(LodeError::Invalid(
                "tabulated density has no rational Laplace transform".into(),
            )),
        }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Evaluates `L(x)`.
    pub fn laplace_polynomial(&self, x: f64) -> f64 {
        self.beta.iter().rev().fold(1.0, |acc, b| acc * x + b)
    }

    /// `T g(x) = -p g'' + (lambda + q - p' - beta_0 p) g' + q beta_0 g`,
    /// which vanishes on solutions of the homogeneous scale equation.
    /// `jet` holds `g, g', g''` at `x`.
    pub fn apply(
        &self,
        premium: &PremiumModel,
        lambda: f64,
        q: f64,
        x: f64,
        jet: [f64; 3],
    ) -> Result<f64, LodeError> {
        if self.m != 1 {
            return Err(LodeError::Unsupported(self.m));
        }
        let mu = self.beta[0];
        let p = premium.rate(x);
        let dp = premium.slope(x);
        Ok(-p * jet[2] + (lambda + q - dp - mu * p) * jet[1] + q * mu * jet[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::closed_form::ClassicalScale;

    #[test]
    fn exponential_operator() {
        let op = LodeOperatorSpec::for_claim(&ClaimModel::Exponential { mu: 0.3 }).unwrap();
        assert_eq!(op.order(), 1);
        assert_eq!(op.beta(), &[0.3]);
        assert!((op.laplace_polynomial(2.0) - 2.3).abs() < 1e-15);
    }

    #[test]
    fn higher_orders_are_representation_only() {
        let op = LodeOperatorSpec::new(2, vec![0.5, 1.5]).unwrap();
        assert!((op.laplace_polynomial(1.0) - 3.0).abs() < 1e-15);
        let err = op.apply(
            &PremiumModel::Constant { c: 1.0 },
            0.1,
            0.05,
            1.0,
            [1.0, 0.0, 0.0],
        );
        assert_eq!(err, Err(LodeError::Unsupported(2)));
        assert!(LodeOperatorSpec::new(2, vec![1.0]).is_err());
        assert!(LodeOperatorSpec::new(0, vec![]).is_err());
    }

    #[test]
    fn annihilates_classical_scale_function() {
        let w = ClassicalScale::new(1.0, 0.3, 0.1, 0.05).unwrap();
        let op = LodeOperatorSpec::for_claim(&ClaimModel::Exponential { mu: 0.3 }).unwrap();
        for x in [0.0, 1.0, 7.5] {
            let jet = [w.value(x), w.derivative(x), second(&w, x)];
            let r = op
                .apply(&PremiumModel::Constant { c: 1.0 }, 0.1, 0.05, x, jet)
                .unwrap();
            assert!(r.abs() < 1e-8 * w.value(x), "x = {x}: {r}");
        }
    }

    fn second(w: &ClassicalScale, x: f64) -> f64 {
        let h = 1e-4;
        (w.derivative(x + h) - w.derivative(x - h)) / (2.0 * h)
    }
}
