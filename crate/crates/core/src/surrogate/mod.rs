//! Five-state nonlinear floating-turbine surrogate.
//!
//! States are `[Θ̇_p, Θ_p, δ̇_T, δ_T, ω_g]` (platform pitch rate and angle,
//! tower-top fore-aft velocity and deflection, rotor speed), inputs are
//! `[τ_g, β]` (generator torque, collective blade pitch) and the scheduling
//! parameter is the free-stream wind speed `w`. The platform pitch inertia
//! and restoring stiffness depend on the plant design through the
//! waterplane-moment factor `(c_s c_d)²`.

mod linearize;
mod trim;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use linearize::{surrogate_labels, LinearizeOptions};
pub use trim::Region;

pub const N_STATES: usize = 5;
pub const N_INPUTS: usize = 2;
pub const N_OUTPUTS: usize = 5;

pub const STATE_LABELS: [&str; N_STATES] = [
    "theta_p_dot",
    "theta_p",
    "delta_t_dot",
    "delta_t",
    "omega_g",
];
pub const INPUT_LABELS: [&str; N_INPUTS] = ["tau_g", "beta"];
pub const OUTPUT_LABELS: [&str; N_OUTPUTS] = ["P", "F_s", "M_s", "omega_g", "theta_p"];

pub mod idx {
    pub const THETA_DOT: usize = 0;
    pub const THETA: usize = 1;
    pub const DELTA_DOT: usize = 2;
    pub const DELTA: usize = 3;
    pub const OMEGA: usize = 4;
    pub const TAU: usize = 0;
    pub const BETA: usize = 1;
    pub const OUT_POWER: usize = 0;
    pub const OUT_SHEAR: usize = 1;
    pub const OUT_MOMENT: usize = 2;
    pub const OUT_OMEGA: usize = 3;
    pub const OUT_THETA: usize = 4;
}

/// Element-wise plant bounds `L_p`, `U_p` on `(c_s, c_d)` [m].
pub const PLANT_LOWER: [f64; 2] = [36.0, 6.0];
pub const PLANT_UPPER: [f64; 2] = [78.0, 24.0];

/// Semisubmersible design: outer-column spacing and diameter [m].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantDesign {
    pub c_s: f64,
    pub c_d: f64,
}

impl PlantDesign {
    pub fn new(c_s: f64, c_d: f64) -> Result<Self> {
        let p = Self { c_s, c_d };
        if !p.in_bounds() {
            return Err(Error::InvalidInput(format!(
                "plant ({c_s}, {c_d}) outside [{:?}, {:?}]",
                PLANT_LOWER, PLANT_UPPER
            )));
        }
        Ok(p)
    }

    pub fn nominal() -> Self {
        Self {
            c_s: 51.75,
            c_d: 12.5,
        }
    }

    pub fn lower() -> Self {
        Self {
            c_s: PLANT_LOWER[0],
            c_d: PLANT_LOWER[1],
        }
    }

    pub fn upper() -> Self {
        Self {
            c_s: PLANT_UPPER[0],
            c_d: PLANT_UPPER[1],
        }
    }

    pub fn in_bounds(&self) -> bool {
        self.c_s.is_finite()
            && self.c_d.is_finite()
            && (PLANT_LOWER[0]..=PLANT_UPPER[0]).contains(&self.c_s)
            && (PLANT_LOWER[1]..=PLANT_UPPER[1]).contains(&self.c_d)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.c_s, self.c_d]
    }

    fn waterplane(&self) -> f64 {
        let q = self.c_s * self.c_d;
        q * q
    }
}

/// `base + slope·(c_s c_d)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantLaw {
    pub base: f64,
    pub slope: f64,
}

impl PlantLaw {
    pub fn at(&self, x_p: &PlantDesign) -> f64 {
        self.base + self.slope * x_p.waterplane()
    }
}

/// `C_p = cp_max · x e^{1−x} · e^{−pitch_decay·β}` with `x = λ/λ_opt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerCoefficient {
    pub cp_max: f64,
    pub lambda_opt: f64,
    /// [1/rad]
    pub pitch_decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateParams {
    /// [m]
    pub rotor_radius: f64,
    /// [kg/m³]
    pub air_density: f64,
    /// Rotor plus generator inertia on the low-speed shaft [kg·m²].
    pub drivetrain_inertia: f64,
    /// Platform pitch inertia [kg·m²].
    pub pitch_inertia: PlantLaw,
    /// Hydrostatic plus mooring pitch stiffness [Nm/rad].
    pub pitch_stiffness: PlantLaw,
    /// [Nm·s/rad]
    pub pitch_damping: f64,
    /// Tower first fore-aft mode: modal mass [kg], stiffness [N/m], damping [N·s/m].
    pub tower_mass: f64,
    pub tower_stiffness: f64,
    pub tower_damping: f64,
    /// Hub height above the pitch axis [m].
    pub lever_arm: f64,
    pub generator_efficiency: f64,
    pub power_coefficient: PowerCoefficient,
    /// Nominal rated wind [m/s]. Trim regions come from the torque balance;
    /// this value must agree with it to within 1%.
    pub rated_wind: f64,
    /// [rad/s]
    pub rated_speed: f64,
    /// [Nm]
    pub rated_torque: f64,
}

const BETZ: f64 = 16.0 / 27.0;

impl SurrogateParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("rotor_radius", self.rotor_radius),
            ("air_density", self.air_density),
            ("drivetrain_inertia", self.drivetrain_inertia),
            ("pitch_inertia.base", self.pitch_inertia.base),
            ("pitch_stiffness.base", self.pitch_stiffness.base),
            ("tower_mass", self.tower_mass),
            ("tower_stiffness", self.tower_stiffness),
            ("lever_arm", self.lever_arm),
            ("generator_efficiency", self.generator_efficiency),
            ("cp_max", self.power_coefficient.cp_max),
            ("lambda_opt", self.power_coefficient.lambda_opt),
            ("rated_wind", self.rated_wind),
            ("rated_speed", self.rated_speed),
            ("rated_torque", self.rated_torque),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let nonneg = [
            ("pitch_inertia.slope", self.pitch_inertia.slope),
            ("pitch_stiffness.slope", self.pitch_stiffness.slope),
            ("pitch_damping", self.pitch_damping),
            ("tower_damping", self.tower_damping),
            ("pitch_decay", self.power_coefficient.pitch_decay),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        if self.generator_efficiency > 1.0 {
            return Err(Error::InvalidInput("generator_efficiency above 1".into()));
        }
        if self.power_coefficient.cp_max >= BETZ {
            return Err(Error::InvalidInput(format!(
                "cp_max {} violates the Betz limit",
                self.power_coefficient.cp_max
            )));
        }
        Ok(())
    }
}

const REFERENCE_JSON: &str = include_str!("../../data/iea15_surrogate.json");

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    params: SurrogateParams,
}

impl Surrogate {
    pub fn new(params: SurrogateParams) -> Result<Self> {
        params.validate()?;
        let s = Self { params };
        let derived = s.derived_rated_wind();
        if (derived - s.params.rated_wind).abs() > 0.01 * s.params.rated_wind {
            return Err(Error::InvalidInput(format!(
                "rated_wind {} disagrees with the torque balance ({derived:.4})",
                s.params.rated_wind
            )));
        }
        Ok(s)
    }

    /// The committed 15 MW reference calibration.
    pub fn reference() -> Self {
        let params: SurrogateParams =
            serde_json::from_str(REFERENCE_JSON).expect("embedded calibration parses");
        Self::new(params).expect("embedded calibration is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::new(crate::io::read_json(path)?)
    }

    pub fn params(&self) -> &SurrogateParams {
        &self.params
    }

    fn swept_area(&self) -> f64 {
        std::f64::consts::PI * self.params.rotor_radius * self.params.rotor_radius
    }

    pub fn pitch_inertia(&self, x_p: &PlantDesign) -> f64 {
        self.params.pitch_inertia.at(x_p)
    }

    pub fn pitch_stiffness(&self, x_p: &PlantDesign) -> f64 {
        self.params.pitch_stiffness.at(x_p)
    }

    pub fn cp(&self, lambda: f64, beta: f64) -> f64 {
        let c = &self.params.power_coefficient;
        let x = lambda / c.lambda_opt;
        c.cp_max * x * (1.0 - x).exp() * (-c.pitch_decay * beta).exp()
    }

    /// Thrust coefficient consistent with `C_p` through actuator-disc
    /// momentum theory: `C_p = 4a(1−a)²`, `C_t = 4a(1−a)`, `a ≤ 1/3`.
    pub fn ct(&self, lambda: f64, beta: f64) -> f64 {
        let a = induction(self.cp(lambda, beta));
        4.0 * a * (1.0 - a)
    }

    /// Thrust [N] and aerodynamic torque [Nm] at relative wind `v`.
    pub fn aero(&self, v: f64, omega: f64, beta: f64) -> (f64, f64) {
        let r = self.params.rotor_radius;
        let q = 0.5 * self.params.air_density * self.swept_area() * v * v;
        let lambda = omega * r / v;
        let cp = self.cp(lambda, beta);
        let a = induction(cp);
        (q * 4.0 * a * (1.0 - a), q * v * cp / omega)
    }

    /// Wind speed at which the optimal-λ torque reaches rated torque at
    /// rated speed (end of the transition region).
    pub fn derived_rated_wind(&self) -> f64 {
        let p = &self.params;
        let f = |w: f64| self.aero(w, p.rated_speed, 0.0).1 - p.rated_torque;
        // Start of the constant-speed region: λ = λ_opt at rated speed.
        let lo = p.rated_speed * p.rotor_radius / p.power_coefficient.lambda_opt;
        let mut hi = 2.0 * lo;
        while f(hi) < 0.0 && hi < 1e3 {
            hi *= 1.5;
        }
        crate::numerics::bisect(f, lo, hi, 1e-13)
    }

    /// State derivative `[Θ̈_p, Θ̇_p, δ̈_T, δ̇_T, ω̇_g]`.
    pub fn dynamics(&self, xi: &[f64], u: &[f64], w: f64, x_p: &PlantDesign) -> Result<[f64; 5]> {
        check_dims(xi, u)?;
        let p = &self.params;
        let omega = xi[idx::OMEGA];
        let v = w - p.lever_arm * xi[idx::THETA_DOT] - xi[idx::DELTA_DOT];
        if !(omega > 0.0) {
            return Err(Error::Domain(format!(
                "rotor speed {omega} rad/s is not positive"
            )));
        }
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "relative wind {v} m/s is not positive"
            )));
        }
        let (ft, ta) = self.aero(v, omega, u[idx::BETA]);
        let ip = self.pitch_inertia(x_p);
        let kh = self.pitch_stiffness(x_p);
        Ok([
            (ft * p.lever_arm - kh * xi[idx::THETA] - p.pitch_damping * xi[idx::THETA_DOT]) / ip,
            xi[idx::THETA_DOT],
            (ft - p.tower_stiffness * xi[idx::DELTA] - p.tower_damping * xi[idx::DELTA_DOT])
                / p.tower_mass,
            xi[idx::DELTA_DOT],
            (ta - u[idx::TAU]) / p.drivetrain_inertia,
        ])
    }

    /// `[P W, F_s kN, M_s kNm, ω_g rad/s, Θ_p rad]`. `M_s` is the generator
    /// torque reaction, standing in for the side-to-side moment.
    pub fn outputs(&self, xi: &[f64], u: &[f64], w: f64, x_p: &PlantDesign) -> Result<[f64; 5]> {
        // Same envelope as the dynamics.
        self.dynamics(xi, u, w, x_p)?;
        let p = &self.params;
        Ok([
            p.generator_efficiency * u[idx::TAU] * xi[idx::OMEGA],
            (p.tower_stiffness * xi[idx::DELTA] + p.tower_damping * xi[idx::DELTA_DOT]) / 1e3,
            u[idx::TAU] / 1e3,
            xi[idx::OMEGA],
            xi[idx::THETA],
        ])
    }
}

fn check_dims(xi: &[f64], u: &[f64]) -> Result<()> {
    if xi.len() != N_STATES || u.len() != N_INPUTS {
        return Err(Error::Dimension(format!(
            "surrogate expects 5 states and 2 inputs, got {} and {}",
            xi.len(),
            u.len()
        )));
    }
    Ok(())
}

/// Axial induction `a ∈ [0, 1/3]` solving `4a(1−a)² = c` (trigonometric
/// root of the cubic).
fn induction(c: f64) -> f64 {
    let arg = (1.0 - 27.0 * c / 8.0).clamp(-1.0, 1.0);
    2.0 / 3.0 * (1.0 - (arg.acos() / 3.0).cos())
}
