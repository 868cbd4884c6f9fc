use nalgebra::{DMatrix, DVector};

use super::{idx, PlantDesign, Surrogate};
use crate::error::{Error, Result};
use crate::lti::OperatingPoint;

/// Operating regime of a trim point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Optimal tip-speed-ratio tracking, zero pitch.
    BelowRated,
    /// Rated speed reached, torque still below rated, zero pitch.
    Transition,
    /// Rated torque and speed, pitch regulates.
    Rated,
}

pub const TRIM_WIND_RANGE: (f64, f64) = (3.0, 25.0);
const TOL: f64 = 1e-9;
const MAX_ITER: usize = 100;

impl Surrogate {
    pub fn region(&self, w: f64) -> Region {
        let p = &self.params;
        let omega_opt = p.power_coefficient.lambda_opt * w / p.rotor_radius;
        if omega_opt < p.rated_speed {
            Region::BelowRated
        } else if self.aero(w, p.rated_speed, 0.0).1 < p.rated_torque {
            Region::Transition
        } else {
            Region::Rated
        }
    }

    /// Below-rated torque law `τ = K_opt ω²` (aerodynamic torque at `λ_opt`).
    pub fn optimal_torque(&self, omega: f64) -> f64 {
        let p = &self.params;
        let r = p.rotor_radius;
        0.5 * p.air_density * std::f64::consts::PI * r.powi(5) * p.power_coefficient.cp_max
            / p.power_coefficient.lambda_opt.powi(3)
            * omega
            * omega
    }

    /// Stationary operating point at wind speed `w`.
    pub fn trim(&self, w: f64, x_p: &PlantDesign) -> Result<OperatingPoint> {
        let (lo, hi) = TRIM_WIND_RANGE;
        if !(lo..=hi).contains(&w) {
            return Err(Error::InvalidInput(format!(
                "trim wind {w} m/s outside [{lo}, {hi}]"
            )));
        }
        let p = &self.params;
        let region = self.region(w);
        let (omega, tau, beta) = match region {
            Region::BelowRated => {
                let omega = p.power_coefficient.lambda_opt * w / p.rotor_radius;
                (omega, self.optimal_torque(omega), 0.0)
            }
            Region::Transition => {
                let omega = p.rated_speed;
                (omega, self.aero(w, omega, 0.0).1, 0.0)
            }
            Region::Rated => {
                // τ_a ∝ exp(−decay·β) at fixed speed and wind.
                let t0 = self.aero(w, p.rated_speed, 0.0).1;
                let beta = (t0 / p.rated_torque).ln() / p.power_coefficient.pitch_decay;
                (p.rated_speed, p.rated_torque, beta)
            }
        };
        let (ft, _) = self.aero(w, omega, beta);
        let xi = [
            0.0,
            ft * p.lever_arm / self.pitch_stiffness(x_p),
            0.0,
            ft / p.tower_stiffness,
            omega,
        ];
        let (xi, u) = self.polish(region, w, x_p, xi, [tau, beta])?;
        Ok(OperatingPoint::new(
            w,
            DVector::from_row_slice(&xi),
            DVector::from_row_slice(&u),
            x_p.as_array(),
        ))
    }

    /// Damped Newton on the five stationarity equations. The free unknowns
    /// are the four structural states plus the regime's free control
    /// variable (ω_g, τ_g or β).
    fn polish(
        &self,
        region: Region,
        w: f64,
        x_p: &PlantDesign,
        xi: [f64; 5],
        u: [f64; 2],
    ) -> Result<([f64; 5], [f64; 2])> {
        let free = |z: &[f64; 5]| -> ([f64; 5], [f64; 2]) {
            let mut xi = [z[0], z[1], z[2], z[3], xi[idx::OMEGA]];
            let mut u = u;
            match region {
                Region::BelowRated => {
                    xi[idx::OMEGA] = z[4];
                    u[idx::TAU] = self.optimal_torque(z[4]);
                }
                Region::Transition => u[idx::TAU] = z[4],
                Region::Rated => u[idx::BETA] = z[4],
            }
            (xi, u)
        };
        let last = match region {
            Region::BelowRated => xi[idx::OMEGA],
            Region::Transition => u[idx::TAU],
            Region::Rated => u[idx::BETA],
        };
        let mut z = [xi[0], xi[1], xi[2], xi[3], last];
        let resid = |z: &[f64; 5]| -> Result<[f64; 5]> {
            let (xi, u) = free(z);
            self.dynamics(&xi, &u, w, x_p)
        };
        let norm = |f: &[f64; 5]| f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut f = resid(&z)?;
        let mut iterations = 0;
        while norm(&f) > TOL {
            if iterations == MAX_ITER {
                return Err(Error::Trim {
                    wind: w,
                    iterations,
                    residual: norm(&f),
                });
            }
            iterations += 1;
            let mut jac = DMatrix::zeros(5, 5);
            for j in 0..5 {
                let h = 1e-6 * z[j].abs().max(1e-3);
                let (mut zp, mut zm) = (z, z);
                zp[j] += h;
                zm[j] -= h;
                let (fp, fm) = (resid(&zp)?, resid(&zm)?);
                for i in 0..5 {
                    jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            let rhs = DVector::from_iterator(5, f.iter().map(|v| -v));
            let step = jac.lu().solve(&rhs).ok_or(Error::Trim {
                wind: w,
                iterations,
                residual: norm(&f),
            })?;
            let mut alpha = 1.0;
            loop {
                let mut trial = z;
                for k in 0..5 {
                    trial[k] += alpha * step[k];
                }
                if let Ok(ft) = resid(&trial) {
                    if norm(&ft) < norm(&f) || alpha < 1e-4 {
                        z = trial;
                        f = ft;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-4 {
                    return Err(Error::Trim {
                        wind: w,
                        iterations,
                        residual: norm(&f),
                    });
                }
            }
        }
        Ok(free(&z))
    }
}
