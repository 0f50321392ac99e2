use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least two points and a positive step")]
    Degenerate,
    #[error("derivative sequence length {got} does not match {expected} values")]
    LengthMismatch { got: usize, expected: usize },
    #[error("x = {x} outside the grid [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("grid function carries no derivative data")]
    NoDerivative,
}

/// A function sampled on the uniform grid `x0 + i * dx`.
///
/// Plain evaluation interpolates linearly; the `smooth_*` accessors use
/// cubic Hermite interpolation of the stored values and derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    derivatives: Option<Vec<f64>>,
}

impl GridFunction {
    pub fn new(
        x0: f64,
        dx: f64,
        values: Vec<f64>,
        derivatives: Option<Vec<f64>>,
    ) -> Result<Self, GridError> {
        if values.len() < 2 || !(dx > 0.0) {
            return Err(GridError::Degenerate);
        }
        if let Some(d) = &derivatives {
            if d.len() != values.len() {
                return Err(GridError::LengthMismatch {
                    got: d.len(),
                    expected: values.len(),
                });
            }
        }
        Ok(Self {
            x0,
            dx,
            values,
            derivatives,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_end(&self) -> f64 {
        self.x_at(self.values.len() - 1)
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivatives(&self) -> Option<&[f64]> {
        self.derivatives.as_deref()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.x_at(i))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the node at `x`, if `x` sits on the grid.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let pos = (x - self.x0) / self.dx;
        let i = pos.round();
        if (pos - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Cell index and local coordinate in `[0, 1]`.
    fn locate(&self, x: f64) -> Result<(usize, f64), GridError> {
        let hi = self.x_end();
        let slack = 1e-12 * self.dx.max(hi.abs());
        if !(x >= self.x0 - slack && x <= hi + slack) {
            return Err(GridError::OutOfRange { x, lo: self.x0, hi });
        }
        let pos = ((x - self.x0) / self.dx).clamp(0.0, (self.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.len() - 2);
        Ok((i, pos - i as f64))
    }

    pub fn value_at(&self, x: f64) -> Result<f64, GridError> {
        let (i, t) = self.locate(x)?;
        Ok(self.values[i] * (1.0 - t) + self.values[i + 1] * t)
    }

    pub fn derivative_at(&self, x: f64) -> Result<f64, GridError> {
        let d = self.derivatives.as_ref().ok_or(GridError::NoDerivative)?;
        let (i, t) = self.locate(x)?;
        Ok(d[i] * (1.0 - t) + d[i + 1] * t)
    }

    pub fn smooth_value_at(&self, x: f64) -> Result<f64, GridError> {
        let d = self.derivatives.as_ref().ok_or(GridError::NoDerivative)?;
        let (i, t) = self.locate(x)?;
        let h = self.dx;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.values[i]
            + (t3 - 2.0 * t2 + t) * h * d[i]
            + (-2.0 * t3 + 3.0 * t2) * self.values[i + 1]
            + (t3 - t2) * h * d[i + 1])
    }

    pub fn smooth_derivative_at(&self, x: f64) -> Result<f64, GridError> {
        let d = self.derivatives.as_ref().ok_or(GridError::NoDerivative)?;
        let (i, t) = self.locate(x)?;
        let h = self.dx;
        let t2 = t * t;
        Ok(
            (6.0 * t2 - 6.0 * t) * (self.values[i] - self.values[i + 1]) / h
                + (3.0 * t2 - 4.0 * t + 1.0) * d[i]
                + (3.0 * t2 - 2.0 * t) * d[i + 1],
        )
    }

    /// Four-point Lagrange interpolation of the derivative data. Unlike the
    /// Hermite derivative it stays smooth across cells when the values came
    /// from a trapezoidal march (where the Hermite derivative is piecewise
    /// linear).
    pub fn cubic_derivative_at(&self, x: f64) -> Result<f64, GridError> {
        let d = self.derivatives.as_ref().ok_or(GridError::NoDerivative)?;
        let (i, t) = self.locate(x)?;
        if self.len() < 4 {
            return Ok(d[i] * (1.0 - t) + d[i + 1] * t);
        }
        let start = i.saturating_sub(1).min(self.len() - 4);
        let s = t + (i - start) as f64;
        let mut acc = 0.0;
        for j in 0..4 {
            let mut w = 1.0;
            for k in 0..4 {
                if k != j {
                    w *= (s - k as f64) / (j as f64 - k as f64);
                }
            }
            acc += w * d[start + j];
        }
        Ok(acc)
    }

    /// CSV with header `x,value,derivative`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 72);
        out.push_str("x,value,derivative\n");
        for i in 0..self.len() {
            let _ = write!(out, "{:.16e},{:.16e},", self.x_at(i), self.values[i]);
            if let Some(d) = &self.derivatives {
                let _ = write!(out, "{:.16e}", d[i]);
            }
            out.push('\n');
        }
        out
    }
}
