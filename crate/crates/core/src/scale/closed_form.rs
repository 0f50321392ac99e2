//! Closed-form scale functions used as independent references.

use thiserror::Error;

use super::kummer::{kummer_m, kummer_m_prime, kummer_u, kummer_u_prime, KummerError};
use crate::model::{ClaimModel, ModelParams, PenaltyModel, PremiumModel};

/// Boundary systems worse than this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("closed form not available: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Kummer(#[from] KummerError),
    #[error("boundary system ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
}

/// `W_q` for a constant premium and exponential claims:
/// `W(x) = c sum_theta e^{theta x} / psi'(theta)` over the two roots of
/// `c theta^2 + (c mu - lambda - q) theta - q mu = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalScale {
    pub roots: [f64; 2],
    weights: [f64; 2],
}

impl ClassicalScale {
    pub fn new(c: f64, mu: f64, lambda: f64, q: f64) -> Result<Self, ClosedFormError> {
        let b = c * mu - lambda - q;
        let disc = b * b + 4.0 * c * q * mu;
        let sq = disc.sqrt();
        // stable pair: avoid subtracting nearly equal numbers
        let big = if b >= 0.0 {
            (-b - sq) / (2.0 * c)
        } else {
            (-b + sq) / (2.0 * c)
        };
        let small = if big != 0.0 {
            -q * mu / (c * big)
        } else {
            -b / c
        };
        let roots = [big.max(small), big.min(small)];
        let psi_prime = |t: f64| c - lambda * mu / ((mu + t) * (mu + t));
        let mut weights = [0.0; 2];
        for (w, t) in weights.iter_mut().zip(roots) {
            let d = psi_prime(t);
            if d == 0.0 || !d.is_finite() {
                return Err(ClosedFormError::NotApplicable(
                    "degenerate root pair".into(),
                ));
            }
            *w = c / d;
        }
        Ok(Self { roots, weights })
    }

    pub fn from_params(params: &ModelParams) -> Result<Self, ClosedFormError> {
        match (&params.premium, &params.claim) {
            (PremiumModel::Constant { c }, ClaimModel::Exponential { mu }) => {
                Self::new(*c, *mu, params.lambda, params.q)
            }
            _ => Err(ClosedFormError::NotApplicable(
                "needs constant premium and exponential claims".into(),
            )),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.weights[0] * (self.roots[0] * x).exp() + self.weights[1] * (self.roots[1] * x).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.weights[0] * self.roots[0] * (self.roots[0] * x).exp()
            + self.weights[1] * self.roots[1] * (self.roots[1] * x).exp()
    }
}

/// Ruin-type `G` for `q = 0`, constant premium, exponential claims and
/// `w = -1`: `-(lambda / (c mu)) exp(-(mu - lambda / c) x)`.
pub fn classical_ruin_g(params: &ModelParams, x: f64) -> Result<f64, ClosedFormError> {
    match (&params.premium, &params.claim, &params.penalty) {
        (
            PremiumModel::Constant { c },
            ClaimModel::Exponential { mu },
            PenaltyModel::Constant { k },
        ) if params.q == 0.0 => {
            Ok(-k * params.lambda / (c * mu) * (-(mu - params.lambda / c) * x).exp())
        }
        _ => Err(ClosedFormError::NotApplicable(
            "needs q = 0, constant premium, exponential claims, constant penalty".into(),
        )),
    }
}

/// `W_q` for `p(x) = c + eps x` and exponential claims:
/// `[C1 M(A, B, z) + C2 U(A, B, z)] (eps x + c)^k e^{-mu x}` with
/// `A = q/eps + 1`, `B = k + 1`, `k = (lambda+q)/eps`, `z = mu x + mu c/eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearKummerScale {
    c: f64,
    eps: f64,
    mu: f64,
    a: f64,
    b: f64,
    k: f64,
    coefficients: [f64; 2],
    pub condition: f64,
}

impl LinearKummerScale {
    pub fn new(params: &ModelParams) -> Result<Self, ClosedFormError> {
        let (c, eps, mu) = match (&params.premium, &params.claim) {
            (PremiumModel::Linear { c, epsilon }, ClaimModel::Exponential { mu })
                if *epsilon > 0.0 =>
            {
                (*c, *epsilon, *mu)
            }
            _ => {
                return Err(ClosedFormError::NotApplicable(
                    "needs linear premium with positive slope and exponential claims".into(),
                ))
            }
        };
        if !(params.q > 0.0) {
            return Err(ClosedFormError::NotApplicable("needs q > 0".into()));
        }
        let rate = params.lambda + params.q;
        let k = rate / eps;
        let mut s = Self {
            c,
            eps,
            mu,
            a: params.q / eps + 1.0,
            b: k + 1.0,
            k,
            coefficients: [0.0; 2],
            condition: f64::NAN,
        };
        let (m0, m1) = s.basis(0, 0.0)?;
        let (u0, u1) = s.basis(1, 0.0)?;
        // columns scaled to unit length before measuring conditioning
        let (nm, nu) = (m0.hypot(m1), u0.hypot(u1));
        let (a11, a21, a12, a22) = (m0 / nm, m1 / nm, u0 / nu, u1 / nu);
        let det = a11 * a22 - a12 * a21;
        let frob = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
        let root = (frob * frob - 4.0 * det * det).max(0.0).sqrt();
        let condition = ((frob + root) / (frob - root).max(0.0)).sqrt();
        if !(condition <= MAX_CONDITION) {
            return Err(ClosedFormError::IllConditioned { condition });
        }
        let full_det = m0 * u1 - u0 * m1;
        let slope = rate / c;
        s.coefficients = [(u1 - u0 * slope) / full_det, (m0 * slope - m1) / full_det];
        s.condition = condition;
        Ok(s)
    }

    fn zeta(&self, x: f64) -> f64 {
        self.mu * x + self.mu * self.c / self.eps
    }

    /// Basis function `which` (0 = M, 1 = U) and its derivative at `x`,
    /// with the envelope normalized by `c^k`.
    fn basis(&self, which: usize, x: f64) -> Result<(f64, f64), ClosedFormError> {
        let z = self.zeta(x);
        let (f, fp) = if which == 0 {
            (
                kummer_m(self.a, self.b, z)?,
                kummer_m_prime(self.a, self.b, z)?,
            )
        } else {
            (
                kummer_u(self.a, self.b, z)?,
                kummer_u_prime(self.a, self.b, z)?,
            )
        };
        let p = self.c + self.eps * x;
        let env = ((self.k * (p / self.c).ln()) - self.mu * x).exp();
        let log_slope = self.k * self.eps / p - self.mu;
        Ok((f * env, (self.mu * fp + f * log_slope) * env))
    }

    pub fn value(&self, x: f64) -> Result<f64, ClosedFormError> {
        let (m, _) = self.basis(0, x)?;
        let (u, _) = self.basis(1, x)?;
        Ok(self.coefficients[0] * m + self.coefficients[1] * u)
    }

    pub fn derivative(&self, x: f64) -> Result<f64, ClosedFormError> {
        let (_, m) = self.basis(0, x)?;
        let (_, u) = self.basis(1, x)?;
        Ok(self.coefficients[0] * m + self.coefficients[1] * u)
    }
}

/// Closed-form `W_q(x)` for a linear premium and exponential claims.
pub fn closed_form_w_linear(params: &ModelParams, x: f64) -> Result<f64, ClosedFormError> {
    LinearKummerScale::new(params)?.value(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear(q: f64) -> ModelParams {
        ModelParams::new(
            PremiumModel::Linear {
                c: 1.0,
                epsilon: 0.02,
            },
            ClaimModel::Exponential { mu: 0.3 },
            PenaltyModel::Zero,
            0.1,
            q,
        )
        .unwrap()
    }

    #[test]
    fn classical_boundary_values() {
        let w = ClassicalScale::new(1.0, 0.3, 0.1, 0.05).unwrap();
        assert_relative_eq!(w.value(0.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(w.derivative(0.0), 0.15, max_relative = 1e-13);
        assert!(w.roots[0] > 0.0 && w.roots[1] < 0.0);
    }

    #[test]
    fn linear_boundary_values() {
        let w = LinearKummerScale::new(&linear(0.05)).unwrap();
        assert_relative_eq!(w.value(0.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(w.derivative(0.0).unwrap(), 0.15, max_relative = 1e-12);
        assert!(w.condition.is_finite());
    }

    #[test]
    fn linear_matches_reference_values() {
        // reference values from an independent high-precision ODE solve
        let w = LinearKummerScale::new(&linear(0.05)).unwrap();
        assert_relative_eq!(w.value(5.0).unwrap(), 1.67283177, max_relative = 1e-8);
        assert_relative_eq!(w.value(10.0).unwrap(), 2.32353111, max_relative = 1e-8);
        assert_relative_eq!(w.value(30.0).unwrap(), 5.89675906, max_relative = 1e-8);
    }

    #[test]
    fn rejects_other_families() {
        let mut p = linear(0.05);
        p.premium = PremiumModel::Constant { c: 1.0 };
        assert!(matches!(
            closed_form_w_linear(&p, 1.0),
            Err(ClosedFormError::NotApplicable(_))
        ));
        assert!(matches!(
            closed_form_w_linear(&linear(0.0), 1.0),
            Err(ClosedFormError::NotApplicable(_))
        ));
        assert!(ClassicalScale::from_params(&linear(0.05)).is_err());
    }
}
