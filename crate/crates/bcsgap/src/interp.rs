//! Shape-preserving cubic interpolation (Fritsch–Carlson tangents) and a
//! small local-Lagrange helper, used to evaluate converged gap functions
//! between grid nodes.

use crate::error::{BcsError, Result};

/// Monotone (shape-preserving) piecewise-cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(BcsError::InvalidArgument(
                "interpolation needs matching arrays of length >= 2".into(),
            ));
        }
        if !x.windows(2).all(|p| p[0] < p[1]) {
            return Err(BcsError::InvalidArgument(
                "interpolation abscissae must be strictly increasing".into(),
            ));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            if s[k - 1] * s[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
            }
        }
        d[0] = edge_tangent(h[0], h.get(1).copied().unwrap_or(h[0]), s[0], s.get(1).copied().unwrap_or(s[0]));
        let hn = h[n - 2];
        let hp = if n >= 3 { h[n - 3] } else { h[n - 2] };
        let sn = s[n - 2];
        let sp = if n >= 3 { s[n - 3] } else { s[n - 2] };
        d[n - 1] = edge_tangent(hn, hp, sn, sp);
        Ok(MonotoneCubic { x, y, d })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Evaluate inside the tabulated domain.
    pub fn eval(&self, xq: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if xq < lo || xq > hi {
            return Err(BcsError::OutOfRange(format!(
                "x = {xq:.6e} outside [{lo:.6e}, {hi:.6e}]"
            )));
        }
        let k = match self.x.binary_search_by(|v| v.total_cmp(&xq)) {
            Ok(k) => k.min(self.x.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.x.len() - 2),
        };
        let h = self.x[k + 1] - self.x[k];
        let t = (xq - self.x[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.y[k] + h * h10 * self.d[k] + h01 * self.y[k + 1] + h * h11 * self.d[k + 1])
    }
}

/// One-sided edge tangent with the standard monotonicity clamp.
fn edge_tangent(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

/// Cubic Lagrange interpolation through four points.
pub fn lagrange4(xs: &[f64; 4], ys: &[f64; 4], x: f64) -> f64 {
    let mut out = 0.0;
    for j in 0..4 {
        let mut l = ys[j];
        for k in 0..4 {
            if k != j {
                l *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
        out += l;
    }
    out
}
