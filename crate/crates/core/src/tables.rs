//! Parameter sweeps of the reference barrier tables.

use serde::Serialize;

use crate::model::{ClaimModel, ModelParams, PenaltyModel, PremiumModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    Q,
    Mu,
    Lambda,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::Q => "q",
            Sweep::Mu => "mu",
            Sweep::Lambda => "lambda",
        }
    }
}

/// One reference table: a family, a swept parameter and the reported `a*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSpec {
    pub number: usize,
    pub title: &'static str,
    pub sweep: Sweep,
    pub values: &'static [f64],
    pub reference: &'static [f64],
    /// Acceptance tolerance on `|a* - reference|`.
    pub tolerance: f64,
    linear: bool,
    mu: f64,
    lambda: f64,
    q: f64,
}

impl TableSpec {
    pub fn params(&self, value: f64) -> ModelParams {
        let (mut mu, mut lambda, mut q) = (self.mu, self.lambda, self.q);
        match self.sweep {
            Sweep::Q => q = value,
            Sweep::Mu => mu = value,
            Sweep::Lambda => lambda = value,
        }
        let premium = if self.linear {
            PremiumModel::Linear {
                c: 1.0,
                epsilon: 0.02,
            }
        } else {
            PremiumModel::Rational { c: 1.0 }
        };
        ModelParams::new(
            premium,
            ClaimModel::Exponential { mu },
            PenaltyModel::Zero,
            lambda,
            q,
        )
        .expect("table parameters are valid")
    }

    pub fn cases(&self) -> impl Iterator<Item = (f64, f64, ModelParams)> + '_ {
        self.values
            .iter()
            .zip(self.reference)
            .map(|(v, a)| (*v, *a, self.params(*v)))
    }
}

/// Tables 1-6. Table 5 sweeps `mu`.
pub const TABLES: [TableSpec; 6] = [
    TableSpec {
        number: 1,
        title: "linear premium, a* against q (mu=0.3, eps=0.02, lambda=0.1, c=1)",
        sweep: Sweep::Q,
        values: &[0.025, 0.03, 0.04, 0.05, 0.06],
        reference: &[17.82, 13.42, 8.42, 5.33, 3.18],
        tolerance: 0.1,
        linear: true,
        mu: 0.3,
        lambda: 0.1,
        q: 0.05,
    },
    TableSpec {
        number: 2,
        title: "linear premium, a* against mu (q=0.05, eps=0.02, lambda=0.1, c=1)",
        sweep: Sweep::Mu,
        values: &[0.25, 0.3, 0.4, 0.5, 0.6, 1.1],
        reference: &[3.97, 5.33, 5.92, 5.7, 5.3, 3.72],
        tolerance: 0.15,
        linear: true,
        mu: 0.3,
        lambda: 0.1,
        q: 0.05,
    },
    TableSpec {
        number: 3,
        title: "linear premium, a* against lambda (mu=0.3, q=0.05, eps=0.02, c=1)",
        sweep: Sweep::Lambda,
        values: &[0.05, 0.12, 0.15, 0.17, 0.2],
        reference: &[4.84, 5.03, 4.08, 3.1, 1.07],
        tolerance: 0.1,
        linear: true,
        mu: 0.3,
        lambda: 0.1,
        q: 0.05,
    },
    TableSpec {
        number: 4,
        title: "rational premium, a* against q (mu=0.3, lambda=0.1, c=1)",
        sweep: Sweep::Q,
        values: &[0.005, 0.01, 0.015, 0.02],
        reference: &[37.03, 23.98, 17.16, 12.77],
        tolerance: 0.15,
        linear: false,
        mu: 0.3,
        lambda: 0.1,
        q: 0.01,
    },
    TableSpec {
        number: 5,
        title: "rational premium, a* against mu (q=0.01, lambda=0.1, c=1)",
        sweep: Sweep::Mu,
        values: &[0.15, 0.2, 0.25, 0.3],
        reference: &[0.0, 23.98, 22.39, 20.05],
        tolerance: 0.15,
        linear: false,
        mu: 0.3,
        lambda: 0.1,
        q: 0.01,
    },
    TableSpec {
        number: 6,
        title: "rational premium, a* against lambda (q=0.01, mu=0.3, c=1)",
        sweep: Sweep::Lambda,
        values: &[0.05, 0.12, 0.15, 0.2, 0.25],
        reference: &[17.73, 20.55, 20.8, 19.16, 13.29],
        tolerance: 0.15,
        linear: false,
        mu: 0.3,
        lambda: 0.1,
        q: 0.01,
    },
];

pub fn table(number: usize) -> Option<&'static TableSpec> {
    TABLES.iter().find(|t| t.number == number)
}
