//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes).

use serde::{Deserialize, Serialize};

use crate::error::{IfsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>, // node slopes
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(IfsError::InvalidArgument("need matching x and y with at least 2 nodes".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(IfsError::InvalidArgument("interpolation nodes must be finite".into()));
        }
        let mut h = Vec::with_capacity(n - 1);
        let mut delta = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let hi = x[i + 1] - x[i];
            if hi <= 0.0 {
                return Err(IfsError::InvalidArgument("x must be strictly increasing".into()));
            }
            h.push(hi);
            delta.push((y[i + 1] - y[i]) / hi);
        }

        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (s1, s2) = (delta[k - 1], delta[k]);
            if s1 == 0.0 || s2 == 0.0 || s1.signum() != s2.signum() {
                d[k] = 0.0;
            } else {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
            }
        }
        d[0] = end_slope(h[0], h.get(1).copied(), delta[0], delta.get(1).copied());
        d[n - 1] = end_slope(
            h[n - 2],
            n.checked_sub(3).map(|i| h[i]),
            delta[n - 2],
            n.checked_sub(3).map(|i| delta[i]),
        );
        Ok(MonotoneCubic { x, y, d })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn y_range(&self) -> (f64, f64) {
        let (a, b) = (self.y[0], self.y[self.y.len() - 1]);
        (a.min(b), a.max(b))
    }

    /// Value at `t`, or `None` outside the node range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.x_range();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => return Some(self.y[i]),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1])
    }
}

// Three-point end slope, limited so the end interval stays monotone.
fn end_slope(h0: f64, h1: Option<f64>, d0: f64, d1: Option<f64>) -> f64 {
    let (Some(h1), Some(d1)) = (h1, d1) else {
        return d0;
    };
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}
