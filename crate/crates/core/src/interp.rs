//! Cubic Hermite interpolation with prescribed slopes.
//!
//! The solver knows exact derivatives at every sample (the area equation
//! gives theta'', the first integral gives theta', the phase equation gives
//! phi'), so resampling uses Hermite segments with those slopes instead of
//! estimating them from differences. For monotone data the slopes are run
//! through the Fritsch-Carlson circle clamp, which keeps each segment
//! monotone without touching slopes that are already safe.

use crate::error::Error;

/// Index of the segment [x[i], x[i+1]] containing xq.
///
/// `x` must be strictly increasing with at least two entries. Queries
/// outside the closed range return [`Error::OutOfRange`].
pub fn locate(x: &[f64], xq: f64) -> Result<usize, Error> {
    debug_assert!(x.len() >= 2);
    let n = x.len();
    if !(xq >= x[0] && xq <= x[n - 1]) {
        return Err(Error::OutOfRange {
            query: xq,
            lo: x[0],
            hi: x[n - 1],
        });
    }
    // partition_point returns the first index with x[i] > xq.
    let i = x.partition_point(|&v| v <= xq);
    Ok(i.clamp(1, n - 1) - 1)
}

/// Evaluate the cubic Hermite segment with values y0, y1 and slopes m0, m1
/// on [x0, x0 + h] at xq.
pub fn hermite_value(x0: f64, h: f64, y0: f64, y1: f64, m0: f64, m1: f64, xq: f64) -> f64 {
    let s = (xq - x0) / h;
    // Horner form of the standard Hermite basis: a + b s + c s^2 + d s^3.
    let a = y0;
    let b = h * m0;
    let c = 3.0 * (y1 - y0) - h * (2.0 * m0 + m1);
    let d = 2.0 * (y0 - y1) + h * (m0 + m1);
    a + s * (b + s * (c + s * d))
}

/// Fritsch-Carlson clamp for one segment with secant slope `delta`.
///
/// Returns slopes scaled back onto the circle alpha^2 + beta^2 <= 9 when
/// they would overshoot, and zero where their sign fights the secant. A
/// flat segment forces both slopes to zero.
pub fn monotone_slopes(delta: f64, m0: f64, m1: f64) -> (f64, f64) {
    if delta == 0.0 {
        return (0.0, 0.0);
    }
    let mut a = m0 / delta;
    let mut b = m1 / delta;
    if a < 0.0 {
        a = 0.0;
    }
    if b < 0.0 {
        b = 0.0;
    }
    let r2 = a * a + b * b;
    if r2 > 9.0 {
        let t = 3.0 / r2.sqrt();
        a *= t;
        b *= t;
    }
    (a * delta, b * delta)
}

/// Piecewise cubic with prescribed slopes over a strictly increasing grid.
///
/// `monotone: true` applies the Fritsch-Carlson clamp per segment, so the
/// interpolant is monotone wherever the data are; `false` keeps the slopes
/// verbatim (appropriate for oscillatory data such as the envelope).
#[derive(Debug, Clone)]
pub struct CubicHermite {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
    monotone: bool,
}

impl CubicHermite {
    pub fn new(x: Vec<f64>, y: Vec<f64>, slope: Vec<f64>, monotone: bool) -> Result<Self, Error> {
        if x.len() < 2 || y.len() != x.len() || slope.len() != x.len() {
            return Err(Error::Domain(format!(
                "interpolation needs matching arrays of length >= 2, got {}, {}, {}",
                x.len(),
                y.len(),
                slope.len()
            )));
        }
        for arr in [&x, &y, &slope] {
            if arr.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(
                    "non-finite value in interpolation data".into(),
                ));
            }
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "interpolation grid must be strictly increasing".into(),
            ));
        }
        Ok(CubicHermite {
            x,
            y,
            slope,
            monotone,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn eval(&self, xq: f64) -> Result<f64, Error> {
        let i = locate(&self.x, xq)?;
        if xq == self.x[i] {
            return Ok(self.y[i]);
        }
        if xq == self.x[i + 1] {
            return Ok(self.y[i + 1]);
        }
        let h = self.x[i + 1] - self.x[i];
        let (mut m0, mut m1) = (self.slope[i], self.slope[i + 1]);
        if self.monotone {
            let delta = (self.y[i + 1] - self.y[i]) / h;
            (m0, m1) = monotone_slopes(delta, m0, m1);
        }
        Ok(hermite_value(
            self.x[i],
            h,
            self.y[i],
            self.y[i + 1],
            m0,
            m1,
            xq,
        ))
    }
}
