//! Shape-preserving piecewise cubic Hermite interpolation.
//!
//! Slopes follow Fritsch–Carlson with the Fritsch–Butland weighted harmonic
//! mean at interior knots and the three-point, shape-guarded formula at the
//! ends. Several channels can share one set of knots, which is how the LPV
//! model stores every matrix entry of a sample family.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PchipTable {
    x: Vec<f64>,
    /// `y[k][i]`: channel `k` at knot `i`.
    y: Vec<Vec<f64>>,
    d: Vec<Vec<f64>>,
}

impl PchipTable {
    pub fn new(x: Vec<f64>, channels: Vec<Vec<f64>>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidInput("PCHIP needs at least two knots".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "PCHIP knots must be strictly increasing".into(),
            ));
        }
        if let Some(k) = channels.iter().position(|c| c.len() != x.len()) {
            return Err(Error::Dimension(format!(
                "channel {k} has {} values for {} knots",
                channels[k].len(),
                x.len()
            )));
        }
        let d = channels.iter().map(|y| slopes(&x, y)).collect();
        Ok(Self { x, y: channels, d })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn channels(&self) -> usize {
        self.y.len()
    }

    pub fn values(&self, k: usize) -> &[f64] {
        &self.y[k]
    }

    /// Interval index for `t`; points outside the knot span use the end cubic.
    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        if t <= self.x[0] {
            0
        } else if t >= self.x[n - 1] {
            n - 2
        } else {
            self.x.partition_point(|&v| v <= t) - 1
        }
    }

    /// Values (and optionally derivatives) of every channel at `t`.
    pub fn eval_into(&self, t: f64, out: &mut [f64], dout: Option<&mut [f64]>) {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        for (k, o) in out.iter_mut().enumerate() {
            let (y, d) = (&self.y[k], &self.d[k]);
            // Exact knot hits return stored data untouched.
            *o = if s == 0.0 {
                y[i]
            } else if s == 1.0 {
                y[i + 1]
            } else {
                h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
            };
        }
        if let Some(dout) = dout {
            let g00 = (6.0 * s2 - 6.0 * s) / h;
            let g10 = 3.0 * s2 - 4.0 * s + 1.0;
            let g01 = (-6.0 * s2 + 6.0 * s) / h;
            let g11 = 3.0 * s2 - 2.0 * s;
            for (k, o) in dout.iter_mut().enumerate() {
                let (y, d) = (&self.y[k], &self.d[k]);
                *o = g00 * y[i] + g10 * d[i] + g01 * y[i + 1] + g11 * d[i + 1];
            }
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.channels()];
        self.eval_into(t, &mut out, None);
        out
    }

    pub fn derivative(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.channels()];
        let mut dout = vec![0.0; self.channels()];
        self.eval_into(t, &mut out, Some(&mut dout));
        dout
    }
}

/// Single-channel convenience wrapper.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip(PchipTable);

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Ok(Self(PchipTable::new(x, vec![y])?))
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut o = [0.0];
        self.0.eval_into(t, &mut o, None);
        o[0]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (mut o, mut d) = ([0.0], [0.0]);
        self.0.eval_into(t, &mut o, Some(&mut d));
        d[0]
    }
}

fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![del[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (del[k - 1], del[k]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        } else if a == b {
            // both zero
            d[k] = 0.0;
        }
    }
    d[0] = end_slope(h[0], h[1], del[0], del[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
