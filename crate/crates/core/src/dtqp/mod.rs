//! Open-loop optimal control of the FOWT over one wind profile.
//!
//! The subproblem maximizes weighted energy capture subject to the LPV
//! dynamics in relative coordinates, the initial condition `ξΔ(0) = 0`,
//! box limits on generator speed, platform pitch, torque and blade pitch,
//! and upper limits on tower-base shear force and moment:
//!
//! ```text
//! min  ∫ −k·η·τ·ω + uᵀΠu + w_Θ·Θ² dt
//! ```
//!
//! All terms are written in the absolute variables and expanded around the
//! wind-dependent operating point, giving a QP in `(ξΔ, uΔ)`. The bilinear
//! power term makes the Hessian indefinite; the solver returns a KKT point.

mod lqdo;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use lqdo::{transcribe_lqdo, Lqdo, LqdoStage, StageRow, TranscribedQp};

use crate::error::{Error, Result};
use crate::io::write_json;
use crate::lpv::LpvSource;
use crate::numerics::trapz;
use crate::qp::{self, QpOptions, QpStatus};
use crate::surrogate::idx;
use crate::trajectory::{linspace, Trajectory};

/// Generator speed limit at rated speed [rad/s].
pub const OMEGA_MAX_1: f64 = 0.7850;
/// Relaxed generator speed limit [rad/s].
pub const OMEGA_MAX_2: f64 = 0.9424;
pub const DEFAULT_MESH: usize = 2500;
/// Horizon [s].
pub const DEFAULT_HORIZON: f64 = 600.0;

/// Relative slack below which a path constraint counts as active.
pub const ACTIVE_TOL: f64 = 1e-5;

const N_STATES: usize = 5;
const N_INPUTS: usize = 2;
const TAU: usize = N_STATES + idx::TAU;
const BETA: usize = N_STATES + idx::BETA;

/// Path and output limits in SI units (platform pitch in radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    /// [rad/s]
    pub omega_max: f64,
    /// [rad]
    pub theta_max: f64,
    /// [N m]
    pub tau_max: f64,
    /// [rad]
    pub beta_max: f64,
    /// [kN]
    pub f_s_max: f64,
    /// [kN m]
    pub m_s_max: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            omega_max: OMEGA_MAX_1,
            theta_max: 6f64.to_radians(),
            tau_max: 19.8e6,
            beta_max: 0.3948,
            f_s_max: 5000.0,
            m_s_max: 32000.0,
        }
    }
}

impl Limits {
    pub fn with_theta_deg(mut self, deg: f64) -> Self {
        self.theta_max = deg.to_radians();
        self
    }

    pub fn with_omega_max(mut self, omega_max: f64) -> Self {
        self.omega_max = omega_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("omega_max", self.omega_max),
            ("theta_max", self.theta_max),
            ("tau_max", self.tau_max),
            ("beta_max", self.beta_max),
            ("f_s_max", self.f_s_max),
            ("m_s_max", self.m_s_max),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "limit {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Objective weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Weights {
    /// Power weight.
    pub k: f64,
    /// Diagonal of the control penalty `Π` on `[τ_g, β]`.
    pub control: [f64; 2],
    /// Weight on `Θ_p²`.
    pub pitch: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            k: 1e-8,
            control: [1e-16, 10.0],
            pitch: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcSettings {
    /// Number of equidistant mesh points.
    pub mesh: usize,
    /// Horizon [s].
    pub t_f: f64,
    pub weights: Weights,
    pub limits: Limits,
    /// Generator efficiency.
    pub eta_g: f64,
}

impl Default for OcSettings {
    fn default() -> Self {
        Self {
            mesh: DEFAULT_MESH,
            t_f: DEFAULT_HORIZON,
            weights: Weights::default(),
            limits: Limits::default(),
            eta_g: 0.965,
        }
    }
}

impl OcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.mesh < 2 {
            return Err(Error::InvalidInput(format!(
                "mesh must have at least 2 points, got {}",
                self.mesh
            )));
        }
        if !(self.t_f.is_finite() && self.t_f > 0.0) {
            return Err(Error::InvalidInput(format!(
                "t_f must be positive, got {}",
                self.t_f
            )));
        }
        if !(self.eta_g > 0.0 && self.eta_g <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "eta_g must lie in (0, 1], got {}",
                self.eta_g
            )));
        }
        self.limits.validate()
    }
}

/// One subproblem: a model, a wind profile over `[0, t_f]` and settings.
#[derive(Clone, Copy)]
pub struct OcProblem<'a> {
    pub source: &'a dyn LpvSource,
    /// Wind speed in channel 0 [m/s].
    pub wind: &'a Trajectory,
    pub settings: OcSettings,
}

/// Model data at one mesh point.
#[derive(Debug, Clone)]
pub struct MeshPoint {
    pub t: f64,
    pub w: f64,
    pub dw_dt: f64,
    pub xi_o: DVector<f64>,
    pub u_o: DVector<f64>,
    pub g: DVector<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// A transcribed subproblem with the mesh data needed to map back.
#[derive(Debug, Clone)]
pub struct Transcription {
    pub qp: TranscribedQp,
    pub mesh: Vec<MeshPoint>,
    pub output_labels: Vec<String>,
    /// Output rows `(output index, limit)` added at every mesh point.
    pub output_limits: Vec<(usize, f64)>,
}

fn output_index(source: &dyn LpvSource, label: &str) -> Result<usize> {
    source
        .labels()
        .outputs
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| Error::InvalidInput(format!("LPV model has no output {label:?}")))
}

/// Builds the QP for `p`.
pub fn transcribe(p: &OcProblem<'_>) -> Result<Transcription> {
    let set = &p.settings;
    set.validate()?;
    if p.wind.start() > 1e-9 || p.wind.end() < set.t_f - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "wind covers [{}, {}] s, horizon needs [0, {}] s",
            p.wind.start(),
            p.wind.end(),
            set.t_f
        )));
    }
    let labels = p.source.labels();
    if labels.states.len() != N_STATES || labels.inputs.len() != N_INPUTS {
        return Err(Error::Dimension(format!(
            "expected {N_STATES} states and {N_INPUTS} inputs, model has {} and {}",
            labels.states.len(),
            labels.inputs.len()
        )));
    }
    let f_idx = output_index(p.source, "F_s")?;
    let m_idx = output_index(p.source, "M_s")?;
    let lim = set.limits;
    let wt = set.weights;
    let keta = wt.k * set.eta_g;
    let [pi_tau, pi_beta] = wt.control;

    let times = linspace(0.0, set.t_f, set.mesh);
    let dwind = p.wind.derivative();
    let mut mesh = Vec::with_capacity(times.len());
    let mut stages = Vec::with_capacity(times.len());
    for &t in &times {
        let w = p.wind.sample(t)[0];
        let dw_dt = dwind.sample(t)[0];
        if !(w.is_finite() && dw_dt.is_finite()) {
            return Err(Error::NonFinite(format!(
                "wind or its derivative at t = {t}"
            )));
        }
        let pt = p.source.eval(w)?;
        let xi_o = pt.op.xi_o.clone();
        let u_o = pt.op.u_o.clone();
        let (theta_o, omega_o) = (xi_o[idx::THETA], xi_o[idx::OMEGA]);
        let (tau_o, beta_o) = (u_o[idx::TAU], u_o[idx::BETA]);

        let mut st = LqdoStage::free(pt.model.a.clone(), pt.model.b.clone());
        st.f = -&pt.dxi_dw * dw_dt;
        st.q_hess = vec![
            (TAU, idx::OMEGA, -keta),
            (TAU, TAU, 2.0 * pi_tau),
            (BETA, BETA, 2.0 * pi_beta),
            (idx::THETA, idx::THETA, 2.0 * wt.pitch),
        ];
        st.q_lin[idx::OMEGA] = -keta * tau_o;
        st.q_lin[TAU] = -keta * omega_o + 2.0 * pi_tau * tau_o;
        st.q_lin[BETA] = 2.0 * pi_beta * beta_o;
        st.q_lin[idx::THETA] = 2.0 * wt.pitch * theta_o;
        st.q_const = -keta * tau_o * omega_o
            + pi_tau * tau_o * tau_o
            + pi_beta * beta_o * beta_o
            + wt.pitch * theta_o * theta_o;
        st.lower[idx::OMEGA] = -omega_o;
        st.upper[idx::OMEGA] = lim.omega_max - omega_o;
        st.upper[idx::THETA] = lim.theta_max - theta_o;
        st.lower[TAU] = -tau_o;
        st.upper[TAU] = lim.tau_max - tau_o;
        st.lower[BETA] = -beta_o;
        st.upper[BETA] = lim.beta_max - beta_o;
        for (o, limit) in [(f_idx, lim.f_s_max), (m_idx, lim.m_s_max)] {
            let mut coeffs = Vec::with_capacity(N_STATES + N_INPUTS);
            for k in 0..N_STATES {
                coeffs.push((k, pt.model.c[(o, k)]));
            }
            for j in 0..N_INPUTS {
                coeffs.push((N_STATES + j, pt.model.d[(o, j)]));
            }
            coeffs.retain(|e| e.1 != 0.0);
            st.rows.push(StageRow {
                coeffs,
                upper: limit - pt.model.g[o],
            });
        }
        stages.push(st);
        mesh.push(MeshPoint {
            t,
            w,
            dw_dt,
            xi_o,
            u_o,
            g: pt.model.g.clone(),
            c: pt.model.c.clone(),
            d: pt.model.d.clone(),
        });
    }

    let scale = variable_scales(&mesh, &lim);
    let lqdo = Lqdo {
        n_states: N_STATES,
        n_inputs: N_INPUTS,
        times,
        stages,
        initial: Some(vec![0.0; N_STATES]),
        terminal: None,
        scale,
    };
    Ok(Transcription {
        qp: transcribe_lqdo(&lqdo)?,
        mesh,
        output_labels: labels.outputs.clone(),
        output_limits: vec![(f_idx, lim.f_s_max), (m_idx, lim.m_s_max)],
    })
}

/// Characteristic magnitude of each relative state and input.
fn variable_scales(mesh: &[MeshPoint], lim: &Limits) -> Vec<f64> {
    let floors: [f64; N_STATES] = [0.01, 0.01, 0.1, 0.01, 0.1];
    let mut s: Vec<f64> = (0..N_STATES)
        .map(|k| mesh.iter().fold(floors[k], |a, m| a.max(m.xi_o[k].abs())))
        .collect();
    s[idx::THETA] = s[idx::THETA].max(lim.theta_max);
    s[idx::OMEGA] = s[idx::OMEGA].max(lim.omega_max);
    s.push(lim.tau_max);
    s.push(lim.beta_max);
    s
}

/// Activity of one path constraint over the mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintActivity {
    pub name: String,
    pub active: bool,
    /// Fraction of mesh points where the constraint is active.
    pub fraction: f64,
    /// Largest violation relative to `max(1, |limit|)`.
    pub max_violation: f64,
}

/// Absolute trajectories on the mesh.
#[derive(Debug, Clone)]
pub struct OcTrajectories {
    pub states: Trajectory,
    pub controls: Trajectory,
    pub outputs: Trajectory,
}

#[derive(Debug, Clone)]
pub struct OcSolution {
    pub status: QpStatus,
    pub times: Vec<f64>,
    pub wind: Vec<f64>,
    /// `None` unless a solution point is available.
    pub trajectories: Option<OcTrajectories>,
    /// Value of the integral objective.
    pub objective: f64,
    pub activity: Vec<ConstraintActivity>,
    pub max_violation: f64,
    pub iterations: usize,
    pub eta_g: f64,
    pub settings: OcSettings,
}

/// `(1/t_f) ∫ η τ ω dt` by the trapezoid rule.
pub fn mean_power(t: &[f64], tau: &[f64], omega: &[f64], eta_g: f64) -> f64 {
    let p: Vec<f64> = tau.iter().zip(omega).map(|(a, b)| eta_g * a * b).collect();
    trapz(t, &p) / (t[t.len() - 1] - t[0])
}

/// Average generator power [W] of an optimal solution.
pub fn average_power(sol: &OcSolution) -> Result<f64> {
    match (&sol.trajectories, sol.status) {
        (Some(tr), QpStatus::Optimal) => Ok(mean_power(
            &sol.times,
            &tr.controls.channel(idx::TAU),
            &tr.states.channel(idx::OMEGA),
            sol.eta_g,
        )),
        _ => Err(Error::UndefinedPower(format!(
            "subproblem status is {:?}",
            sol.status
        ))),
    }
}

fn activity(name: &str, values: &[f64], limit: f64, upper: bool) -> ConstraintActivity {
    let denom = limit.abs().max(1.0);
    let slack: Vec<f64> = values
        .iter()
        .map(|v| {
            if upper {
                (limit - v) / denom
            } else {
                (v - limit) / denom
            }
        })
        .collect();
    let hits = slack.iter().filter(|s| **s <= ACTIVE_TOL).count();
    ConstraintActivity {
        name: name.to_string(),
        active: hits > 0,
        fraction: hits as f64 / values.len() as f64,
        max_violation: slack.iter().fold(0.0f64, |a, s| a.max(-s)),
    }
}

/// Transcribes and solves `p`. Infeasibility is a status, not an error.
pub fn solve_ocp(p: &OcProblem<'_>, opts: &QpOptions) -> Result<OcSolution> {
    let tr = transcribe(p)?;
    Ok(solve_transcribed(&tr, &p.settings, opts))
}

pub fn solve_transcribed(tr: &Transcription, set: &OcSettings, opts: &QpOptions) -> OcSolution {
    let sol = qp::solve(&tr.qp.qp, opts);
    let times: Vec<f64> = tr.mesh.iter().map(|m| m.t).collect();
    let wind: Vec<f64> = tr.mesh.iter().map(|m| m.w).collect();
    let mut out = OcSolution {
        status: sol.status,
        times,
        wind,
        trajectories: None,
        objective: f64::NAN,
        activity: Vec::new(),
        max_violation: f64::NAN,
        iterations: sol.iterations,
        eta_g: set.eta_g,
        settings: *set,
    };
    if sol.status == QpStatus::Infeasible {
        return out;
    }
    let rel = tr.qp.unscale(&sol.z);
    let lqdo_obj: f64 = rel
        .iter()
        .zip(&tr.qp.weights)
        .zip(&tr.mesh)
        .map(|((v, w), m)| w * stage_integrand(v, m, set))
        .sum();
    let mut states = Vec::with_capacity(rel.len());
    let mut controls = Vec::with_capacity(rel.len());
    let mut outputs = Vec::with_capacity(rel.len());
    for (v, m) in rel.iter().zip(&tr.mesh) {
        let xd = DVector::from_row_slice(&v[..N_STATES]);
        let ud = DVector::from_row_slice(&v[N_STATES..]);
        states.push((&m.xi_o + &xd).iter().copied().collect::<Vec<f64>>());
        controls.push((&m.u_o + &ud).iter().copied().collect::<Vec<f64>>());
        outputs.push(
            (&m.g + &m.c * &xd + &m.d * &ud)
                .iter()
                .copied()
                .collect::<Vec<f64>>(),
        );
    }
    let col = |rows: &[Vec<f64>], k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let lim = set.limits;
    let omega = col(&states, idx::OMEGA);
    let theta = col(&states, idx::THETA);
    let tau = col(&controls, idx::TAU);
    let beta = col(&controls, idx::BETA);
    let mut act = vec![
        activity("omega_g_min", &omega, 0.0, false),
        activity("omega_g_max", &omega, lim.omega_max, true),
        activity("theta_p_max", &theta, lim.theta_max, true),
        activity("tau_g_min", &tau, 0.0, false),
        activity("tau_g_max", &tau, lim.tau_max, true),
        activity("beta_min", &beta, 0.0, false),
        activity("beta_max", &beta, lim.beta_max, true),
    ];
    for &(o, limit) in &tr.output_limits {
        let name = format!("{}_max", tr.output_labels[o]);
        act.push(activity(&name, &col(&outputs, o), limit, true));
    }
    out.max_violation = act.iter().fold(0.0f64, |a, c| a.max(c.max_violation));
    out.activity = act;
    out.objective = lqdo_obj;
    let mk = |rows: Vec<Vec<f64>>, labels: Vec<String>| {
        Trajectory::new(out.times.clone(), rows, labels).expect("mesh rows are consistent")
    };
    out.trajectories = Some(OcTrajectories {
        states: mk(
            states,
            crate::surrogate::STATE_LABELS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
        controls: mk(
            controls,
            crate::surrogate::INPUT_LABELS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
        outputs: mk(outputs, tr.output_labels.clone()),
    });
    out
}

/// Objective integrand in absolute variables.
fn stage_integrand(v: &[f64], m: &MeshPoint, set: &OcSettings) -> f64 {
    let wt = set.weights;
    let theta = m.xi_o[idx::THETA] + v[idx::THETA];
    let omega = m.xi_o[idx::OMEGA] + v[idx::OMEGA];
    let tau = m.u_o[idx::TAU] + v[TAU];
    let beta = m.u_o[idx::BETA] + v[BETA];
    -wt.k * set.eta_g * tau * omega
        + wt.control[0] * tau * tau
        + wt.control[1] * beta * beta
        + wt.pitch * theta * theta
}

/// Machine-readable summary of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcSummary {
    pub status: QpStatus,
    /// [W], absent unless optimal.
    pub average_power: Option<f64>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub max_violation: Option<f64>,
    pub activity: Vec<ConstraintActivity>,
    pub settings: OcSettings,
}

impl OcSolution {
    pub fn summary(&self) -> OcSummary {
        let finite = |v: f64| v.is_finite().then_some(v);
        OcSummary {
            status: self.status,
            average_power: average_power(self).ok(),
            objective: finite(self.objective),
            iterations: self.iterations,
            max_violation: finite(self.max_violation),
            activity: self.activity.clone(),
            settings: self.settings,
        }
    }

    /// Writes `solution.csv` (when a point exists) and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if let Some(tr) = &self.trajectories {
            let mut labels = vec!["w".to_string()];
            labels.extend(tr.states.labels().iter().cloned());
            labels.extend(tr.controls.labels().iter().cloned());
            labels.extend(tr.outputs.labels().iter().cloned());
            let rows = (0..self.times.len())
                .map(|i| {
                    let mut r = vec![self.wind[i]];
                    r.extend_from_slice(&tr.states.rows()[i]);
                    r.extend_from_slice(&tr.controls.rows()[i]);
                    r.extend_from_slice(&tr.outputs.rows()[i]);
                    r
                })
                .collect();
            Trajectory::new(self.times.clone(), rows, labels)?
                .write_csv(&dir.join("solution.csv"))?;
        }
        write_json(&dir.join("summary.json"), &self.summary())
    }
}
