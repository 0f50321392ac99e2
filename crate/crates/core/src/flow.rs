//! Deterministic motion of the surplus between claims: `dr/dt = p(r)`.

use thiserror::Error;

use crate::model::PremiumModel;
use crate::numerics::{integrate, DormandPrince, OdeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("target level {level} is below the starting level {x}")]
    LevelBelowStart { x: f64, level: f64 },
    #[error("trajectory leaves the premium domain [0, {end}]")]
    OutOfDomain { end: f64 },
    #[error("integrator failure: {0}")]
    Integrator(#[from] OdeError),
}

/// Forward and backward flow of the premium vector field.
#[derive(Debug, Clone)]
pub struct FlowSolver {
    pub premium: PremiumModel,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
}

impl FlowSolver {
    pub fn new(premium: PremiumModel) -> Self {
        Self {
            premium,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_step: f64::INFINITY,
        }
    }

    fn integrator(&self) -> DormandPrince {
        DormandPrince::new(self.abs_tol, self.rel_tol, self.max_step)
    }

    /// `r_t^x`: the surplus after time `t` without claims, starting from `x`.
    pub fn flow_forward(&self, x: f64, t: f64) -> Result<f64, FlowError> {
        if t < 0.0 {
            return Err(FlowError::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(x);
        }
        match self.premium {
            PremiumModel::Constant { c } => Ok(x + c * t),
            PremiumModel::Linear { c, epsilon } if epsilon == 0.0 => Ok(x + c * t),
            PremiumModel::Linear { c, epsilon } => {
                // (x + c/eps) e^{eps t} - c/eps without cancellation
                let g = (epsilon * t).exp_m1();
                Ok(x + (x * epsilon + c) * g / epsilon)
            }
            PremiumModel::Rational { .. } => self.numeric_forward(x, t),
            PremiumModel::Tabulated { .. } => {
                let end = self.premium.domain_end();
                if x > end || self.hit_time(x, end)? < t {
                    return Err(FlowError::OutOfDomain { end });
                }
                self.numeric_forward(x, t)
            }
        }
    }

    fn numeric_forward(&self, x: f64, t: f64) -> Result<f64, FlowError> {
        let premium = &self.premium;
        let end = premium.domain_end();
        let y = self.integrator().solve(
            |_, y: &[f64; 1]| [premium.rate(y[0].min(end))],
            0.0,
            [x],
            t,
        )?;
        Ok(y[0])
    }

    /// Starting point `r` with `r_t^r = x`, i.e. the backward trajectory
    /// evaluated `t` time units before reaching `x`.
    pub fn flow_backward(&self, x: f64, t: f64) -> Result<f64, FlowError> {
        if t < 0.0 {
            return Err(FlowError::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(x);
        }
        if self.hit_time(0.0, x)? < t {
            return Err(FlowError::OutOfDomain {
                end: self.premium.domain_end(),
            });
        }
        match self.premium {
            PremiumModel::Constant { c } => Ok(x - c * t),
            PremiumModel::Linear { c, epsilon } if epsilon == 0.0 => Ok(x - c * t),
            PremiumModel::Linear { c, epsilon } => {
                let g = (-epsilon * t).exp_m1();
                Ok(x + (x * epsilon + c) * g / epsilon)
            }
            _ => {
                let premium = &self.premium;
                let y = self.integrator().solve(
                    |_, y: &[f64; 1]| [-premium.rate(y[0].max(0.0))],
                    0.0,
                    [x],
                    t,
                )?;
                Ok(y[0].max(0.0))
            }
        }
    }

    /// Time for the claim-free trajectory to climb from `x` to `level`.
    ///
    /// Non-closed-form premiums use `int_x^level dr / p(r)`, which is exact
    /// for a scalar autonomous flow.
    pub fn hit_time(&self, x: f64, level: f64) -> Result<f64, FlowError> {
        if level < x {
            return Err(FlowError::LevelBelowStart { x, level });
        }
        if level == x {
            return Ok(0.0);
        }
        match self.premium {
            PremiumModel::Constant { c } => Ok((level - x) / c),
            PremiumModel::Linear { c, epsilon } if epsilon == 0.0 => Ok((level - x) / c),
            PremiumModel::Linear { c, epsilon } => {
                Ok((epsilon * (level - x) / (c + epsilon * x)).ln_1p() / epsilon)
            }
            PremiumModel::Rational { .. } | PremiumModel::Tabulated { .. } => {
                let end = self.premium.domain_end();
                if level > end * (1.0 + 1e-12) {
                    return Err(FlowError::OutOfDomain { end });
                }
                let premium = &self.premium;
                let r = integrate(|y| 1.0 / premium.rate(y.min(end)), x, level, 1e-13, 1e-13);
                assert!(
                    r.value.is_finite(),
                    "premium must stay positive on [x, level]"
                );
                Ok(r.value)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rational() -> FlowSolver {
        FlowSolver::new(PremiumModel::Rational { c: 1.0 })
    }

    #[test]
    fn constant_motion() {
        let f = FlowSolver::new(PremiumModel::Constant { c: 1.0 });
        assert_eq!(f.flow_forward(0.0, 5.0).unwrap(), 5.0);
        assert_eq!(f.hit_time(2.0, 5.0).unwrap(), 3.0);
        assert_eq!(f.hit_time(4.0, 4.0).unwrap(), 0.0);
        assert_eq!(f.flow_backward(5.0, 2.0).unwrap(), 3.0);
    }

    #[test]
    fn linear_closed_form_against_integrator() {
        let closed = FlowSolver::new(PremiumModel::Linear {
            c: 1.0,
            epsilon: 0.02,
        });
        let expected = 50.0 * ((0.02f64).exp() - 1.0);
        assert!((closed.flow_forward(0.0, 1.0).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.010_067_0).abs() < 1e-7);
        // the same vector field as a table, integrated numerically
        let points: Vec<[f64; 2]> = (0..=2000)
            .map(|i| [i as f64 * 0.1, 1.0 + 0.02 * i as f64 * 0.1])
            .collect();
        let numeric = FlowSolver::new(PremiumModel::Tabulated { points });
        for (x, t) in [(0.0, 1.0), (3.0, 20.0), (10.0, 40.0)] {
            let a = closed.flow_forward(x, t).unwrap();
            let b = numeric.flow_forward(x, t).unwrap();
            assert!((a - b).abs() < 1e-7 * a.max(1.0), "{x} {t}: {a} vs {b}");
        }
    }

    #[test]
    fn linear_hit_time_inverse() {
        let f = FlowSolver::new(PremiumModel::Linear {
            c: 1.0,
            epsilon: 0.02,
        });
        let t = f.hit_time(0.0, 17.82).unwrap();
        assert!((t - 50.0 * (1.0f64 + 0.02 * 17.82).ln()).abs() < 1e-12);
        assert!((f.flow_forward(0.0, t).unwrap() - 17.82).abs() < 1e-12);
    }

    #[test]
    fn identity_at_zero_time() {
        assert_eq!(rational().flow_forward(3.3, 0.0).unwrap(), 3.3);
        assert!(matches!(
            rational().flow_forward(1.0, -1.0),
            Err(FlowError::NegativeTime(_))
        ));
        assert!(matches!(
            rational().hit_time(2.0, 1.0),
            Err(FlowError::LevelBelowStart { .. })
        ));
    }

    #[test]
    fn tabulated_domain_is_enforced() {
        let f = FlowSolver::new(PremiumModel::Tabulated {
            points: vec![[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]],
        });
        assert!((f.flow_forward(0.5, 1.0).unwrap() - 1.5).abs() < 1e-9);
        assert!(matches!(
            f.flow_forward(0.5, 3.0),
            Err(FlowError::OutOfDomain { .. })
        ));
        assert!(matches!(
            f.hit_time(0.5, 3.0),
            Err(FlowError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn backward_undoes_forward() {
        let f = rational();
        let y = f.flow_forward(2.0, 7.0).unwrap();
        let back = f.flow_backward(y, 7.0).unwrap();
        assert!((back - 2.0).abs() < 1e-8, "{back}");
        assert!(matches!(
            f.flow_backward(1.0, 10.0),
            Err(FlowError::OutOfDomain { .. })
        ));
    }

    fn premiums() -> impl Strategy<Value = PremiumModel> {
        prop_oneof![
            (0.2f64..3.0).prop_map(|c| PremiumModel::Constant { c }),
            (0.2f64..3.0, 0.0f64..0.1).prop_map(|(c, epsilon)| PremiumModel::Linear { c, epsilon }),
            (0.2f64..3.0).prop_map(|c| PremiumModel::Rational { c }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn semigroup(premium in premiums(), x in 0.0f64..50.0, s in 0.0f64..20.0, t in 0.0f64..20.0) {
            let f = FlowSolver::new(premium);
            let two_step = f.flow_forward(f.flow_forward(x, s).unwrap(), t).unwrap();
            let one_step = f.flow_forward(x, s + t).unwrap();
            prop_assert!((two_step - one_step).abs() <= 10.0 * f.abs_tol * one_step.max(1.0),
                "{} vs {}", two_step, one_step);
        }

        #[test]
        fn hit_time_inverts_flow(premium in premiums(), x in 0.0f64..50.0, gap in 1e-3f64..60.0) {
            let f = FlowSolver::new(premium);
            let b = x + gap;
            let t = f.hit_time(x, b).unwrap();
            let back = f.flow_forward(x, t).unwrap();
            prop_assert!((back - b).abs() <= 1e-8 * b.max(1.0), "{} vs {}", back, b);
        }

        #[test]
        fn strictly_increasing(premium in premiums(), x in 0.0f64..50.0, t in 0.01f64..20.0, dx in 0.01f64..5.0, dt in 0.01f64..5.0) {
            let f = FlowSolver::new(premium);
            let base = f.flow_forward(x, t).unwrap();
            prop_assert!(f.flow_forward(x + dx, t).unwrap() > base);
            prop_assert!(f.flow_forward(x, t + dt).unwrap() > base);
        }
    }
}
