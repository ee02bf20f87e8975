//! Piecewise cubic Hermite interpolation with monotone (Fritsch-Carlson)
//! tangent estimation.

use crate::error::{Error, Result};

/// A C1 piecewise-cubic interpolant defined by knots, values, and one
/// tangent per knot.
#[derive(Debug, Clone)]
pub struct CubicHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl CubicHermite {
    /// Build with monotone-preserving tangents. Monotone data stays
    /// monotone between knots and values never overshoot the local data.
    pub fn pchip(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_grid(&x, &y)?;
        let d = pchip_tangents(&x, &y);
        Ok(CubicHermite { x, y, d })
    }

    /// Build from explicit tangents.
    pub fn with_tangents(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        check_grid(&x, &y)?;
        if d.len() != x.len() {
            return Err(Error::Domain("tangent count must match knot count".into()));
        }
        Ok(CubicHermite { x, y, d })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn tangents(&self) -> &[f64] {
        &self.d
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn segment_of(&self, t: f64) -> usize {
        // index i with x[i] <= t < x[i+1]; edge pieces extend outward
        let n = self.x.len();
        if t <= self.x[0] {
            return 0;
        }
        if t >= self.x[n - 1] {
            return n - 2;
        }
        self.x.partition_point(|&v| v <= t) - 1
    }

    /// Evaluate; outside the domain the nearest edge cubic is extended.
    pub fn value(&self, t: f64) -> f64 {
        let i = self.segment_of(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(s);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// First derivative of the interpolant.
    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.segment_of(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let dh00 = (6.0 * s * s - 6.0 * s) / h;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = (-6.0 * s * s + 6.0 * s) / h;
        let dh11 = 3.0 * s * s - 2.0 * s;
        dh00 * self.y[i] + dh10 * self.d[i] + dh01 * self.y[i + 1] + dh11 * self.d[i + 1]
    }

    /// Cubic coefficients of segment i around x[i]:
    /// p(t) = c0 + c1 u + c2 u^2 + c3 u^3 with u = t - x[i].
    pub fn segment_coefficients(&self, i: usize) -> [f64; 4] {
        let h = self.x[i + 1] - self.x[i];
        let y0 = self.y[i];
        let y1 = self.y[i + 1];
        let d0 = self.d[i];
        let d1 = self.d[i + 1];
        let c2 = (3.0 * (y1 - y0) / h - 2.0 * d0 - d1) / h;
        let c3 = (d0 + d1 - 2.0 * (y1 - y0) / h) / (h * h);
        [y0, d0, c2, c3]
    }

    pub fn segment_count(&self) -> usize {
        self.x.len() - 1
    }
}

fn check_grid(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::Domain("need at least two knots".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Domain("knot and value counts differ".into()));
    }
    for i in 1..x.len() {
        if !(x[i] > x[i - 1]) {
            return Err(Error::Domain(format!(
                "knots must be strictly ascending; violation at index {i}"
            )));
        }
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("knots and values must be finite".into()));
    }
    Ok(())
}

fn hermite_basis(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (
        2.0 * s3 - 3.0 * s2 + 1.0,
        s3 - 2.0 * s2 + s,
        -2.0 * s3 + 3.0 * s2,
        s3 - s2,
    )
}

/// Fritsch-Carlson tangents (the scheme used by scipy's PchipInterpolator).
pub fn pchip_tangents(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    if n == 2 {
        let s = (y[1] - y[0]) / (x[1] - x[0]);
        d[0] = s;
        d[1] = s;
        return d;
    }
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    for i in 1..n - 1 {
        if s[i - 1] == 0.0 || s[i] == 0.0 || (s[i - 1] > 0.0) != (s[i] > 0.0) {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
    }
    d[0] = edge_tangent(h[0], h[1], s[0], s[1]);
    d[n - 1] = edge_tangent(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
    d
}

fn edge_tangent(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        d = 0.0;
    } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
        d = 3.0 * s0;
    }
    d
}
