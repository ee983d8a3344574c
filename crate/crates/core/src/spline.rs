//! Not-a-knot cubic spline on a uniform grid of [0, 1].

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSpline {
    values: Vec<f64>,
    // second derivatives at the nodes
    moments: Vec<f64>,
    h: f64,
}

impl UniformSpline {
    /// Needs at least four samples; the not-a-knot end conditions make the
    /// interpolant exact for cubics.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(Error::Config(format!("tabulated coefficient needs at least 4 samples, got {n}")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("tabulated coefficient has non-finite sample {v}")));
        }
        let h = 1.0 / (n - 1) as f64;
        let rhs: Vec<f64> =
            (1..n - 1).map(|i| 6.0 * (values[i - 1] - 2.0 * values[i] + values[i + 1]) / (h * h)).collect();

        // Unknowns M_1..M_{n-2}. Eliminating M_0 = 2M_1 - M_2 (and the mirror
        // at the right end) turns the first and last rows into 6 M = rhs.
        let m = n - 2;
        let mut diag = vec![4.0; m];
        let mut lower = vec![1.0; m.saturating_sub(1)];
        let mut upper = vec![1.0; m.saturating_sub(1)];
        diag[0] = 6.0;
        diag[m - 1] = 6.0;
        if m > 1 {
            upper[0] = 0.0;
            lower[m - 2] = 0.0;
        }
        let inner = thomas(&lower, &diag, &upper, &rhs);

        let mut moments = vec![0.0; n];
        moments[1..n - 1].copy_from_slice(&inner);
        moments[0] = 2.0 * moments[1] - moments[2];
        moments[n - 1] = 2.0 * moments[n - 2] - moments[n - 3];
        Ok(Self { values, moments, h })
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.values.len();
        let t = (x / self.h).floor();
        let i = if t < 0.0 { 0 } else { (t as usize).min(n - 2) };
        (i, x - i as f64 * self.h)
    }

    pub fn value(&self, x: f64) -> f64 {
        let (i, s) = self.locate(x);
        let h = self.h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let t = h - s;
        m0 * t * t * t / (6.0 * h)
            + m1 * s * s * s / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * t
            + (y1 / h - m1 * h / 6.0) * s
    }

    pub fn slope(&self, x: f64) -> f64 {
        let (i, s) = self.locate(x);
        let h = self.h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let t = h - s;
        -m0 * t * t / (2.0 * h) + m1 * s * s / (2.0 * h) + (y1 - y0) / h - (m1 - m0) * h / 6.0
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { upper[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}
