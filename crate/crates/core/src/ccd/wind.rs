//! Synthetic wind load cases.
//!
//! Each profile is its mean speed plus two slow sinusoidal ramps and
//! low-pass-filtered Gaussian noise. Phases and noise come from a ChaCha
//! stream keyed by `(seed, case id)`, so profiles are reproducible bit for
//! bit. The fluctuating part is re-centred so the time average equals the
//! mean before clipping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{uniform_grid, Trajectory};

/// Default case means [m/s], denser between 8 and 11 m/s; case 7 is 14 m/s.
pub const DEFAULT_MEANS: [f64; 11] = [4.0, 6.0, 8.0, 9.0, 10.0, 11.0, 14.0, 16.0, 18.0, 20.0, 24.0];

/// Admissible range of case means [m/s].
pub const MEAN_RANGE: (f64, f64) = (3.0, 25.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindConfig {
    /// Strictly increasing case means [m/s].
    pub means: Vec<f64>,
    pub seed: u64,
    /// Profile length [s].
    pub t_f: f64,
    /// Sample interval [s].
    pub dt: f64,
    /// Periods of the two ramps [s].
    pub ramp_periods: [f64; 2],
    /// Ramp amplitudes relative to the mean.
    pub ramp_amplitudes: [f64; 2],
    /// Standard deviation of the noise relative to the mean.
    pub noise_sigma: f64,
    /// Time constant of each of the two noise filter stages [s].
    pub noise_tau: f64,
    /// Profiles are clipped to this range [m/s].
    pub clip: [f64; 2],
}

impl Default for WindConfig {
    fn default() -> Self {
        Self {
            means: DEFAULT_MEANS.to_vec(),
            seed: 7,
            t_f: 600.0,
            dt: 0.25,
            ramp_periods: [150.0, 400.0],
            ramp_amplitudes: [0.10, 0.05],
            noise_sigma: 0.03,
            noise_tau: 10.0,
            clip: [0.0, 27.0],
        }
    }
}

impl WindConfig {
    /// Profiles without ramps or noise.
    pub fn steady(means: Vec<f64>, t_f: f64) -> Self {
        Self {
            means,
            t_f,
            ramp_amplitudes: [0.0, 0.0],
            noise_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.is_empty() {
            return Err(Error::InvalidInput("no wind case means".into()));
        }
        if self.means.windows(2).any(|m| !(m[1] > m[0])) {
            return Err(Error::InvalidInput(
                "case means must be strictly increasing".into(),
            ));
        }
        let (lo, hi) = MEAN_RANGE;
        if let Some(m) = self.means.iter().find(|m| !(**m >= lo && **m <= hi)) {
            return Err(Error::InvalidInput(format!(
                "case mean {m} outside [{lo}, {hi}] m/s"
            )));
        }
        if !(self.t_f > 0.0 && self.dt > 0.0 && self.dt <= self.t_f) {
            return Err(Error::InvalidInput(format!(
                "bad wind grid t_f = {}, dt = {}",
                self.t_f, self.dt
            )));
        }
        if !(self.noise_tau > 0.0 && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidInput(
                "noise sigma must be nonnegative and tau positive".into(),
            ));
        }
        if self.ramp_periods.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidInput("ramp periods must be positive".into()));
        }
        if !(self.clip[0] >= 0.0 && self.clip[1] > self.clip[0]) {
            return Err(Error::InvalidInput(format!(
                "bad clip range {:?}",
                self.clip
            )));
        }
        Ok(())
    }
}

/// One load case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindCase {
    /// 1-based case number.
    pub id: usize,
    /// [m/s]
    pub mean: f64,
    pub profile: Trajectory,
}

pub fn generate_wind_cases(cfg: &WindConfig) -> Result<Vec<WindCase>> {
    cfg.validate()?;
    let t = uniform_grid(0.0, cfg.t_f, cfg.dt);
    cfg.means
        .iter()
        .enumerate()
        .map(|(k, &mean)| {
            let id = k + 1;
            let v = profile(cfg, id, mean, &t);
            Ok(WindCase {
                id,
                mean,
                profile: Trajectory::scalar(t.clone(), v, "w")?,
            })
        })
        .collect()
}

fn profile(cfg: &WindConfig, id: usize, mean: f64, t: &[f64]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(id as u64);
    let phases: [f64; 2] = [
        rng.random::<f64>() * std::f64::consts::TAU,
        rng.random::<f64>() * std::f64::consts::TAU,
    ];
    let noise = filtered_noise(&mut rng, t.len(), cfg.dt / cfg.noise_tau);
    let mut fluct: Vec<f64> = t
        .iter()
        .zip(&noise)
        .map(|(&ti, n)| {
            let ramps: f64 = (0..2)
                .map(|j| {
                    let arg = std::f64::consts::TAU * ti / cfg.ramp_periods[j] + phases[j];
                    cfg.ramp_amplitudes[j] * arg.sin()
                })
                .sum();
            mean * (ramps + cfg.noise_sigma * n)
        })
        .collect();
    let avg = crate::numerics::trapz(t, &fluct) / (t[t.len() - 1] - t[0]);
    fluct.iter_mut().for_each(|f| *f -= avg);
    fluct
        .into_iter()
        .map(|f| (mean + f).clamp(cfg.clip[0], cfg.clip[1]))
        .collect()
}

/// White noise through two cascaded first-order lags with step `dt/τ`,
/// after a warm-up of five time constants, normalized to zero sample mean
/// and unit sample deviation.
fn filtered_noise(rng: &mut ChaCha8Rng, n: usize, step: f64) -> Vec<f64> {
    let a = 1.0 - (-step).exp();
    let warmup = (5.0 / step).ceil() as usize;
    let (mut x, mut y) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for k in 0..warmup + n {
        let e: f64 = rng.sample(StandardNormal);
        x += a * (e - x);
        y += a * (x - y);
        if k >= warmup {
            out.push(y);
        }
    }
    let m = out.iter().sum::<f64>() / n as f64;
    let sd = (out.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
    let scale = if sd > 0.0 { 1.0 / sd } else { 0.0 };
    out.iter().map(|v| (v - m) * scale).collect()
}
