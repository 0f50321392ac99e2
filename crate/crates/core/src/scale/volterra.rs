//! Forward march for `p(x) y'(x) = (lambda + q) y(x) - lambda (y * f)(x) + s(x)`.

use crate::model::{ClaimModel, ModelParams};

/// Values above this magnitude are treated as overflow.
pub(crate) const OVERFLOW_LIMIT: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Convolution {
    /// `S_n = y_n + r S_{n-1}`, exact for exponential densities.
    Recurrence,
    Direct,
}

impl Convolution {
    pub(crate) fn for_claim(claim: &ClaimModel) -> Self {
        match claim {
            ClaimModel::Exponential { .. } => Convolution::Recurrence,
            ClaimModel::Tabulated { .. } => Convolution::Direct,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum MarchFailure {
    Overflow { x: f64, last_safe: f64 },
    NonFinite { x: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct March {
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

/// Everything that stays fixed across marches on one grid.
pub(crate) struct Kernel<'a> {
    pub params: &'a ModelParams,
    pub dx: f64,
    pub n: usize,
    pub premium: Vec<f64>,
    pub density: Vec<f64>,
    pub mode: Convolution,
}

impl<'a> Kernel<'a> {
    pub fn new(params: &'a ModelParams, dx: f64, n: usize) -> Self {
        let premium = (0..n).map(|i| params.premium.rate(i as f64 * dx)).collect();
        let support = params.claim.support_end();
        let density = (0..n)
            .map(|i| {
                let z = i as f64 * dx;
                if z > support {
                    0.0
                } else {
                    params.claim.density(z)
                }
            })
            .collect();
        Self {
            params,
            dx,
            n,
            premium,
            density,
            mode: Convolution::for_claim(&params.claim),
        }
    }

    /// Trapezoid `int_0^{x_n} y(x_n - z) f(z) dz` by direct summation.
    pub fn convolution_at(&self, y: &[f64], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let f = &self.density;
        let mut acc = 0.0;
        for k in 0..=n {
            if f[k] != 0.0 {
                acc += y[n - k] * f[k];
            }
        }
        self.dx * (acc - 0.5 * (y[n] * f[0] + y[0] * f[n]))
    }

    /// Marches from `y(0) = y0`. `source[n]` is `s(x_n)`.
    pub fn march(&self, y0: f64, source: Option<&[f64]>) -> Result<March, MarchFailure> {
        let lambda = self.params.lambda;
        let rate = lambda + self.params.q;
        let dx = self.dx;
        let f = &self.density;
        let p = &self.premium;
        let s = |i: usize| source.map_or(0.0, |s| s[i]);
        let alpha_shift = lambda * dx * f[0] * 0.5;
        // last nonzero density node bounds the direct sum
        let reach = f.iter().rposition(|v| *v != 0.0).unwrap_or(0);
        let ratio = match self.params.claim {
            ClaimModel::Exponential { mu } => (-mu * dx).exp(),
            _ => 0.0,
        };

        let mut y = Vec::with_capacity(self.n);
        let mut d = Vec::with_capacity(self.n);
        y.push(y0);
        d.push((rate * y0 + s(0)) / p[0]);
        let mut running = y0;

        for m in 1..self.n {
            let x = m as f64 * dx;
            // K_m = dx [ sum_{k=1}^{m} y_{m-k} f_k - y_0 f_m / 2 ]
            let tail = match self.mode {
                Convolution::Recurrence => {
                    let mu = f[0];
                    mu * ratio * running
                }
                Convolution::Direct => {
                    let lo = m.saturating_sub(reach);
                    let mut acc = 0.0;
                    for j in lo..m {
                        acc += y[j] * f[m - j];
                    }
                    acc
                }
            };
            let k = dx * (tail - 0.5 * y[0] * f[m]);
            let alpha = (rate - alpha_shift) / p[m];
            let beta = (s(m) - lambda * k) / p[m];
            let next = (y[m - 1] + 0.5 * dx * (d[m - 1] + beta)) / (1.0 - 0.5 * dx * alpha);
            if !next.is_finite() {
                return Err(MarchFailure::NonFinite { x });
            }
            if next.abs() > OVERFLOW_LIMIT {
                return Err(MarchFailure::Overflow {
                    x,
                    last_safe: x - dx,
                });
            }
            y.push(next);
            d.push(alpha * next + beta);
            if self.mode == Convolution::Recurrence {
                running = next + ratio * running;
            }
        }
        Ok(March {
            values: y,
            derivatives: d,
        })
    }

    /// Max-norm of `p y' - (lambda+q) y + lambda (y*f) - s` on about
    /// `samples` nodes, with the convolution summed directly.
    pub fn residual(&self, march: &March, source: Option<&[f64]>, samples: usize) -> f64 {
        let lambda = self.params.lambda;
        let rate = lambda + self.params.q;
        let stride = (self.n / samples.max(1)).max(1);
        let mut worst = 0.0f64;
        for i in (0..self.n)
            .step_by(stride)
            .chain(std::iter::once(self.n - 1))
        {
            let conv = self.convolution_at(&march.values, i);
            let r = self.premium[i] * march.derivatives[i] - rate * march.values[i] + lambda * conv
                - source.map_or(0.0, |s| s[i]);
            worst = worst.max(r.abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PenaltyModel, PremiumModel};

    fn params() -> ModelParams {
        ModelParams::new(
            PremiumModel::Linear {
                c: 1.0,
                epsilon: 0.02,
            },
            ClaimModel::Exponential { mu: 0.3 },
            PenaltyModel::Zero,
            0.1,
            0.05,
        )
        .unwrap()
    }

    #[test]
    fn recurrence_matches_direct_sum() {
        let p = params();
        let mut kernel = Kernel::new(&p, 0.01, 3001);
        let fast = kernel.march(1.0, None).unwrap();
        kernel.mode = Convolution::Direct;
        let slow = kernel.march(1.0, None).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            assert!((a - b).abs() <= 1e-11 * a.abs());
        }
    }

    #[test]
    fn residual_vanishes_on_own_scheme() {
        let p = params();
        let kernel = Kernel::new(&p, 0.01, 2001);
        let m = kernel.march(1.0, None).unwrap();
        let max = m.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(kernel.residual(&m, None, 500) <= 1e-10 * max);
    }

    #[test]
    fn initial_slope_from_relation() {
        let p = params();
        let kernel = Kernel::new(&p, 0.01, 10);
        let m = kernel.march(1.0, None).unwrap();
        assert!((m.derivatives[0] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_reported() {
        let p = ModelParams::new(
            PremiumModel::Constant { c: 0.01 },
            ClaimModel::Exponential { mu: 0.01 },
            PenaltyModel::Zero,
            5.0,
            1.0,
        )
        .unwrap();
        let kernel = Kernel::new(&p, 0.01, 20001);
        assert!(matches!(
            kernel.march(1.0, None),
            Err(MarchFailure::Overflow { .. })
        ));
    }
}
