//! Confluent hypergeometric functions `M(a, b, z)` and `U(a, b, z)`.

use statrs::function::gamma::gamma;
use thiserror::Error;

/// `U` switches to its asymptotic expansion at and beyond this argument.
pub const U_ASYMPTOTIC_CROSSOVER: f64 = 30.0;
/// `M` switches to its asymptotic expansion beyond this argument.
const M_ASYMPTOTIC_CROSSOVER: f64 = 600.0;
const SERIES_TOL: f64 = 1e-14;
const FULL_TOL: f64 = 1e-17;
const MAX_TERMS: usize = 20_000;
/// Cancellation beyond this relative level raises `PrecisionLoss`.
pub const CANCELLATION_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KummerError {
    #[error("parameter domain violation: {0}")]
    Domain(String),
    #[error("cancellation lost precision (relative error ~{relative_error:e}, value {value})")]
    PrecisionLoss { value: f64, relative_error: f64 },
    #[error("series failed to converge for a = {a}, b = {b}, z = {z}")]
    NoConvergence { a: f64, b: f64, z: f64 },
    #[error("result not representable for a = {a}, b = {b}, z = {z}")]
    Overflow { a: f64, b: f64, z: f64 },
}

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v == v.round()
}

fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Relative accuracy assumed for each summand (gamma values included).
const COMPONENT_ACCURACY: f64 = 1e-15;

fn check_cancellation(value: f64, scale: f64) -> Result<f64, KummerError> {
    let relative_error = COMPONENT_ACCURACY * scale / value.abs();
    if !value.is_finite() || relative_error > CANCELLATION_LIMIT {
        Err(KummerError::PrecisionLoss {
            value,
            relative_error,
        })
    } else {
        Ok(value)
    }
}

/// Kummer's function of the first kind.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    m_with_tol(a, b, z, SERIES_TOL)
}

fn m_with_tol(a: f64, b: f64, z: f64, tol: f64) -> Result<f64, KummerError> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(KummerError::Domain("non-finite argument".into()));
    }
    if is_nonpositive_integer(b) {
        return Err(KummerError::Domain(format!(
            "b = {b} is a non-positive integer"
        )));
    }
    if z == 0.0 || a == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 && !is_nonpositive_integer(a) {
        // Kummer transformation keeps the series free of sign changes
        return Ok(z.exp() * m_with_tol(b - a, b, -z, tol)?);
    }
    if z > M_ASYMPTOTIC_CROSSOVER && !is_nonpositive_integer(a) {
        return m_asymptotic(a, b, z);
    }
    let (sum, scale) = m_series(a, b, z, tol)?;
    check_cancellation(sum, scale)
}

/// Power series with term-ratio stopping. Returns the sum and the largest
/// partial magnitude seen.
fn m_series(a: f64, b: f64, z: f64, tol: f64) -> Result<(f64, f64), KummerError> {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut scale = 1.0f64;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * z / (nf + 1.0);
        sum += term;
        scale = scale.max(term.abs());
        if term == 0.0 {
            return Ok((sum, scale));
        }
        let ratio = ((a + nf + 1.0) / (b + nf + 1.0) * z / (nf + 2.0)).abs();
        if ratio < 1.0 && term.abs() <= tol * sum.abs() {
            return Ok((sum, scale));
        }
        if !sum.is_finite() {
            return Err(KummerError::Overflow { a, b, z });
        }
    }
    Err(KummerError::NoConvergence { a, b, z })
}

fn m_asymptotic(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    // M ~ Gamma(b)/Gamma(a) e^z z^(a-b) sum (b-a)_k (1-a)_k / k! z^-k
    let series = asymptotic_sum(b - a, 1.0 - a, 1.0 / z, false)?;
    let log_prefactor = z + (a - b) * z.ln();
    let value = gamma(b) * rgamma(a) * log_prefactor.exp() * series;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(KummerError::Overflow { a, b, z })
    }
}

/// `sum_k (p)_k (r)_k / k! t^k`, truncated at its smallest term unless
/// it terminates.
fn asymptotic_sum(p: f64, r: f64, t: f64, terminating: bool) -> Result<f64, KummerError> {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut last = f64::INFINITY;
    if terminating {
        let mut scale = 1.0f64;
        for k in 0..MAX_TERMS {
            let kf = k as f64;
            term *= (p + kf) * (r + kf) / (kf + 1.0) * t;
            if term == 0.0 {
                return check_cancellation(sum, scale);
            }
            sum += term;
            scale = scale.max(term.abs());
        }
        return Err(KummerError::NoConvergence {
            a: p,
            b: r,
            z: 1.0 / t,
        });
    }
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (p + kf) * (r + kf) / (kf + 1.0) * t;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() >= last {
            // diverging tail: the previous term bounds the error
            return if last <= CANCELLATION_LIMIT * sum.abs() {
                Ok(sum)
            } else {
                Err(KummerError::PrecisionLoss {
                    value: sum,
                    relative_error: last / sum.abs(),
                })
            };
        }
        sum += term;
        last = term.abs();
        if last <= SERIES_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(KummerError::NoConvergence {
        a: p,
        b: r,
        z: 1.0 / t,
    })
}

/// Kummer's function of the second kind, `z > 0`.
pub fn kummer_u(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(KummerError::Domain("non-finite argument".into()));
    }
    if z <= 0.0 {
        return Err(KummerError::Domain(format!("U needs z > 0, got {z}")));
    }
    let terminating = is_nonpositive_integer(a) || is_nonpositive_integer(a - b + 1.0);
    if terminating || z >= U_ASYMPTOTIC_CROSSOVER {
        // U ~ z^-a sum (a)_k (a-b+1)_k / k! (-1/z)^k, exact when it terminates
        let series = asymptotic_sum(a, a - b + 1.0, -1.0 / z, terminating)?;
        let value = z.powf(-a) * series;
        return if value.is_finite() {
            Ok(value)
        } else {
            Err(KummerError::Overflow { a, b, z })
        };
    }
    if b == b.round() {
        return Err(KummerError::Domain(format!(
            "integer b = {b} below the asymptotic crossover"
        )));
    }
    // full-precision series: the two terms may cancel heavily
    let t1 = gamma(1.0 - b) * rgamma(a - b + 1.0) * m_with_tol(a, b, z, FULL_TOL)?;
    let t2 = gamma(b - 1.0)
        * rgamma(a)
        * z.powf(1.0 - b)
        * m_with_tol(a - b + 1.0, 2.0 - b, z, FULL_TOL)?;
    if !(t1.is_finite() && t2.is_finite()) {
        return Err(KummerError::Overflow { a, b, z });
    }
    check_cancellation(t1 + t2, t1.abs().max(t2.abs()))
}

/// `d/dz M(a, b, z) = (a / b) M(a + 1, b + 1, z)`.
pub fn kummer_m_prime(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    Ok(a / b * kummer_m(a + 1.0, b + 1.0, z)?)
}

/// `d/dz U(a, b, z) = -a U(a + 1, b + 1, z)`.
pub fn kummer_u_prime(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(-a * kummer_u(a + 1.0, b + 1.0, z)?)
}
