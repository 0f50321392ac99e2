use serde::Serialize;

use super::{ModelError, ModelParams, PenaltyModel, PremiumModel};
use crate::numerics::DormandPrince;

/// Initial capitals at which the speed integral is sampled.
const SPEED_CAPITALS: [f64; 4] = [0.0, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub message: String,
}

/// Affine fit `int_0^H e^{-qt} p(r_t^x) dt <= A x + B` over the sampled capitals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedFit {
    pub horizon: f64,
    pub capitals: Vec<f64>,
    pub integrals: Vec<f64>,
    /// Same integrals over half the horizon, used to judge convergence.
    pub half_horizon_integrals: Vec<f64>,
    pub a: f64,
    pub b: f64,
    /// Outcome of a closed-form criterion, where the family has one.
    pub analytic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
    pub speed: SpeedFit,
    /// Smallest level above which `p(x) > lambda * E[C]` on the working domain.
    pub drift_threshold: Option<f64>,
    pub penalty_envelope: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn speed_integral(params: &ModelParams, x: f64, horizon: f64) -> Result<f64, ModelError> {
    let premium = &params.premium;
    let q = params.q;
    let end = premium.domain_end();
    if x >= end {
        return Ok(0.0);
    }
    // stop where a tabulated premium runs out of samples
    let t_stop = if end.is_finite() {
        let r = crate::numerics::integrate(|y| 1.0 / premium.rate(y), x, end, 1e-12, 1e-12);
        r.value.min(horizon)
    } else {
        horizon
    };
    let solver = DormandPrince::new(1e-10, 1e-10, f64::INFINITY);
    let y = solver
        .solve(
            |t, y: &[f64; 2]| {
                let p = premium.rate(y[0].min(end));
                [p, (-q * t).exp() * p]
            },
            0.0,
            [x, 0.0],
            t_stop,
        )
        .map_err(|e| ModelError::Premium(format!("speed integral failed: {e}")))?;
    Ok(y[1])
}

fn fit(capitals: &[f64], integrals: &[f64]) -> (f64, f64) {
    let b = integrals[0].max(0.0);
    let a = capitals
        .iter()
        .zip(integrals)
        .skip(1)
        .map(|(x, i)| ((i - b) / x).max(0.0))
        .fold(0.0, f64::max);
    (a, b)
}

/// Checks an instance against the standing assumptions of the model: the
/// speed condition, eventual positive drift and penalty integrability.
///
/// Structural defects are returned as errors; failed assumptions are
/// reported in the returned [`ValidationReport`].
pub fn validate_model(params: &ModelParams, horizon: f64) -> Result<ValidationReport, ModelError> {
    params.check()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ModelError::Rate(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let mut checks = Vec::new();

    let capitals = SPEED_CAPITALS.to_vec();
    let integrals = capitals
        .iter()
        .map(|&x| speed_integral(params, x, horizon))
        .collect::<Result<Vec<_>, _>>()?;
    let half = capitals
        .iter()
        .map(|&x| speed_integral(params, x, 0.5 * horizon))
        .collect::<Result<Vec<_>, _>>()?;
    let (a, b) = fit(&capitals, &integrals);

    let q = params.q;
    let analytic = match params.premium {
        PremiumModel::Linear { epsilon, .. } if epsilon > 0.0 => Some(q > 0.0 && epsilon < q),
        PremiumModel::Linear { .. }
        | PremiumModel::Constant { .. }
        | PremiumModel::Rational { .. } => Some(q > 0.0),
        PremiumModel::Tabulated { .. } => None,
    };
    let (speed_ok, speed_msg) = if q == 0.0 {
        (
            false,
            "q = 0: the undiscounted premium integral diverges along the claim-free trajectory"
                .to_string(),
        )
    } else if let Some(ok) = analytic {
        let msg = match params.premium {
            PremiumModel::Linear { epsilon, .. } if !ok => format!(
                "epsilon = {epsilon} >= q = {q}: e^(-qt) p(r_t) grows like e^((epsilon - q) t)"
            ),
            PremiumModel::Linear { epsilon, .. } => {
                format!("epsilon = {epsilon} < q = {q}; fitted A = {a:.6}, B = {b:.6}")
            }
            _ => format!("bounded premium with q > 0; fitted A = {a:.6}, B = {b:.6}"),
        };
        (ok, msg)
    } else {
        // no closed form: require the integrals to have settled over the horizon
        let settled = integrals
            .iter()
            .zip(&half)
            .all(|(full, h)| (full - h) <= 1e-2 * (1.0 + full.abs()));
        let msg = if settled {
            format!("integrals settled within the horizon; fitted A = {a:.6}, B = {b:.6}")
        } else {
            "integrals still growing at the horizon".to_string()
        };
        (settled, msg)
    };
    checks.push(CheckOutcome {
        name: "speed_condition".into(),
        passed: speed_ok,
        message: speed_msg,
    });

    // eventual positive drift on the working domain
    let load = params.lambda * params.mean_claim();
    let domain = params
        .premium
        .domain_end()
        .min(200.0 * params.mean_claim().max(1.0));
    let n = 4000;
    let mut threshold = None;
    for i in (0..=n).rev() {
        let x = domain * i as f64 / n as f64;
        if params.premium.rate(x) > load {
            threshold = Some(x);
        } else {
            break;
        }
    }
    checks.push(match threshold {
        Some(x0) => CheckOutcome {
            name: "positive_drift".into(),
            passed: true,
            message: format!("p(x) > lambda E[C] = {load:.6} for x in [{x0:.4}, {domain:.4}]"),
        },
        None => CheckOutcome {
            name: "positive_drift".into(),
            passed: false,
            message: format!(
                "p({domain:.4}) <= lambda E[C] = {load:.6}: surplus does not drift to infinity"
            ),
        },
    });

    let envelope = params.penalty_envelope()?;
    let penalty_ok = envelope.is_finite();
    let msg = match params.penalty {
        PenaltyModel::Zero => "no penalty".to_string(),
        _ => format!("w <= 0 and sup_y E[-w(y - C) | C > y] = {envelope:.6}"),
    };
    checks.push(CheckOutcome {
        name: "penalty".into(),
        passed: penalty_ok,
        message: msg,
    });

    Ok(ValidationReport {
        checks,
        speed: SpeedFit {
            horizon,
            capitals,
            integrals,
            half_horizon_integrals: half,
            a,
            b,
            analytic,
        },
        drift_threshold: threshold,
        penalty_envelope: envelope,
    })
}
