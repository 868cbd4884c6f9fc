//! Sampled time histories.
//!
//! A [`Trajectory`] is a strictly increasing time grid with one vector of
//! values per grid point. Between grid points it is treated as piecewise
//! linear, which is how every input signal in the toolkit (wind profiles,
//! scheduled controls) is interpreted by the integrators.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    t: Vec<f64>,
    values: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl Trajectory {
    pub fn new(t: Vec<f64>, values: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::InvalidInput("trajectory grid is empty".into()));
        }
        if values.len() != t.len() {
            return Err(Error::Dimension(format!(
                "{} value rows for {} grid points",
                values.len(),
                t.len()
            )));
        }
        if let Some(k) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "time grid not strictly increasing at index {}",
                k + 1
            )));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory time grid".into()));
        }
        let width = labels.len();
        if let Some(k) = values.iter().position(|row| row.len() != width) {
            return Err(Error::Dimension(format!(
                "row {k} has {} values, expected {width}",
                values[k].len()
            )));
        }
        Ok(Self { t, values, labels })
    }

    /// Single-channel trajectory.
    pub fn scalar(t: Vec<f64>, values: Vec<f64>, label: &str) -> Result<Self> {
        let rows = values.into_iter().map(|v| vec![v]).collect();
        Self::new(t, rows, vec![label.to_string()])
    }

    /// Channel held at `value` over `[t0, t1]` (two grid points).
    pub fn constant(t0: f64, t1: f64, value: &[f64], labels: &[&str]) -> Result<Self> {
        Self::new(
            vec![t0, t1],
            vec![value.to_vec(), value.to_vec()],
            labels.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn width(&self) -> usize {
        self.labels.len()
    }

    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Values of channel `k` over the grid.
    pub fn channel(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[k]).collect()
    }

    /// Index `i` of the grid interval `[t_i, t_{i+1}]` containing `t`,
    /// clamped to the first/last interval.
    fn interval(&self, t: f64) -> usize {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            return 0;
        }
        if t >= self.t[n - 1] {
            return n - 2;
        }
        self.t.partition_point(|&x| x <= t) - 1
    }

    /// Linear interpolation at `t`, holding the end values outside the grid.
    pub fn sample_into(&self, t: f64, out: &mut [f64]) {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            out.copy_from_slice(&self.values[0]);
            return;
        }
        if t >= self.t[n - 1] {
            out.copy_from_slice(&self.values[n - 1]);
            return;
        }
        let i = self.interval(t);
        let s = (t - self.t[i]) / (self.t[i + 1] - self.t[i]);
        let (a, b) = (&self.values[i], &self.values[i + 1]);
        for k in 0..out.len() {
            out[k] = a[k] + s * (b[k] - a[k]);
        }
    }

    pub fn sample(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.width()];
        self.sample_into(t, &mut out);
        out
    }

    /// Time derivative by central differences on the trajectory's own grid
    /// (one-sided at the ends). Constant trajectories yield exact zeros.
    pub fn derivative(&self) -> Trajectory {
        let n = self.t.len();
        let w = self.width();
        let mut rows = vec![vec![0.0; w]; n];
        if n >= 2 {
            for (i, row) in rows.iter_mut().enumerate() {
                let (lo, hi) = if i == 0 {
                    (0, 1)
                } else if i == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (i - 1, i + 1)
                };
                let dt = self.t[hi] - self.t[lo];
                for k in 0..w {
                    row[k] = (self.values[hi][k] - self.values[lo][k]) / dt;
                }
            }
        }
        let labels = self.labels.iter().map(|l| format!("d{l}/dt")).collect();
        Trajectory {
            t: self.t.clone(),
            values: rows,
            labels,
        }
    }

    /// Trapezoidal integral of channel `k` over the whole grid.
    pub fn integrate(&self, k: usize) -> f64 {
        self.t
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0][k] + v[1][k]))
            .sum()
    }

    /// Time average of channel `k` (trapezoidal).
    pub fn mean(&self, k: usize) -> f64 {
        if self.len() < 2 {
            return self.values[0][k];
        }
        self.integrate(k) / (self.end() - self.start())
    }

    /// Adds a per-time offset vector to every row.
    pub fn offset_by(&self, mut offset: impl FnMut(f64) -> Vec<f64>) -> Trajectory {
        let values = self
            .t
            .iter()
            .zip(&self.values)
            .map(|(&t, row)| {
                let o = offset(t);
                row.iter().zip(o).map(|(a, b)| a + b).collect()
            })
            .collect();
        Trajectory {
            t: self.t.clone(),
            values,
            labels: self.labels.clone(),
        }
    }

    /// Reads a CSV whose first column is time; remaining columns become channels.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "{}: expected a time column and at least one channel",
                path.display()
            )));
        }
        let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut t = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut nums = rec.iter().map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
            });
            t.push(nums.next().unwrap_or(Ok(f64::NAN))?);
            values.push(nums.collect::<Result<Vec<f64>>>()?);
        }
        Self::new(t, values, labels)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (t, row) in self.t.iter().zip(&self.values) {
            let mut rec = vec![fmt_num(*t)];
            rec.extend(row.iter().map(|v| fmt_num(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Shortest round-trip representation, `inf`/`nan` spelled out.
pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Uniform grid from `t0` to `t1` with nominal `step`; the final point is `t1`.
pub fn uniform_grid(t0: f64, t1: f64, step: f64) -> Vec<f64> {
    let n = ((t1 - t0) / step).round().max(1.0) as usize;
    (0..=n)
        .map(|i| t0 + (t1 - t0) * i as f64 / n as f64)
        .collect()
}

/// `n` equidistant points on `[t0, t1]`.
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![t0],
        _ => (0..n)
            .map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
