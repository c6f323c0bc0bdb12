use alloc::vec;
use alloc::vec::Vec;

use super::UniformSeries;
use crate::{Error, Result};

/// Fritsch-Carlson monotone piecewise cubic Hermite interpolant.
///
/// Interior slopes are the weighted harmonic mean of the adjacent secants
/// (zero at local extrema); end slopes use the shape-preserving three-point
/// formula. Each cubic piece is then monotone, so it never leaves the range
/// spanned by its two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

fn same_sign(a: f64, b: f64) -> bool {
    (a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0)
}

/// Node derivatives for [`Pchip`]. `x` must be strictly increasing.
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::LengthMismatch {
            what: "pchip nodes",
            left: n,
            right: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidArgument("pchip needs at least 2 nodes".into()));
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    if h.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("pchip abscissae must increase strictly".into()));
    }
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return Ok(vec![delta[0]; 2]);
    }

    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if same_sign(delta[k - 1], delta[k]) {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    Ok(d)
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if !same_sign(d, m0) {
        0.0
    } else if !same_sign(m0, m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

impl Pchip {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let slopes = pchip_slopes(x, y)?;
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            slopes,
        })
    }

    /// Evaluates inside `[x_0, x_last]`; outside it returns `None`.
    pub fn eval(&self, xq: f64) -> Option<f64> {
        let n = self.x.len();
        if xq < self.x[0] || xq > self.x[n - 1] {
            return None;
        }
        let k = match self.x.binary_search_by(|v| v.total_cmp(&xq)) {
            Ok(k) => return Some(self.y[k]),
            Err(k) => k - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let t = (xq - self.x[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(
            h00 * self.y[k]
                + h10 * h * self.slopes[k]
                + h01 * self.y[k + 1]
                + h11 * h * self.slopes[k + 1],
        )
    }
}

/// Fills missing glucose inside each day from that day's present readings.
/// Slots before the first or after the last reading of a day stay missing.
pub fn pchip_interpolate(series: &UniformSeries) -> Result<UniformSeries> {
    let mut out = series.clone();
    for (day, range) in series.day_ranges() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = range
            .clone()
            .filter_map(|i| series.glucose[i].map(|g| (series.slots[i] as f64, g)))
            .unzip();
        if xs.len() < 2 {
            return Err(Error::Interpolation {
                day,
                present: xs.len(),
            });
        }
        let interp = Pchip::new(&xs, &ys)?;
        for i in range {
            if series.glucose[i].is_none() {
                if let Some(v) = interp.eval(series.slots[i] as f64) {
                    out.glucose[i] = Some(v);
                    out.interpolated[i] = true;
                }
            }
        }
    }
    Ok(out)
}
