use serde::{Deserialize, Serialize};

use super::{check_structure, mask_of, simulate_lpv, LpvModel};
use crate::error::Result;
use crate::lti::{
    eigenvalue_deviation, hinf_error, hinf_norm, simulate_lti, sorted_eigenvalues, HinfOptions,
    OperatingPoint, StateSpaceModel, DEFAULT_STEP,
};
use crate::surrogate::{idx, PlantDesign, Surrogate};
use crate::trajectory::{uniform_grid, Trajectory};

#[derive(Debug, Clone)]
pub struct ValidationOptions {
    /// Relative H∞ tolerance: held-out error over the held-out model's own norm.
    pub epsilon: f64,
    pub hinf: HinfOptions,
    /// Output and input labels of the subsystem scored in the frequency domain.
    pub outputs: Vec<String>,
    pub inputs: Vec<String>,
    /// Wind band expected to dominate the errors [m/s].
    pub transition: (f64, f64),
    /// Run the step-wind time-domain comparison (needs the surrogate).
    pub time_domain: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            hinf: HinfOptions::default(),
            outputs: vec!["omega_g".into(), "theta_p".into()],
            inputs: vec!["tau_g".into(), "beta".into()],
            transition: (8.0, 12.0),
            time_domain: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutError {
    pub w: f64,
    /// Sampled H∞ norm of the difference between interpolated and held-out models.
    pub hinf_error: f64,
    pub reference_norm: f64,
    pub relative_error: f64,
    /// Same metric for the nearest training sample used as a frozen LTI model.
    pub nearest_lti_error: f64,
    pub nearest_w: f64,
    /// Largest entry-wise error of A, B, C, D relative to each matrix's largest entry.
    pub max_entry_error: f64,
    pub eigen_deviation: f64,
    pub sparsity_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRecord {
    pub w: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDomainRms {
    pub w_avg: f64,
    pub theta_lpv: f64,
    pub omega_lpv: f64,
    pub theta_lti: f64,
    pub omega_lti: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub structure_ok: bool,
    pub structure_message: Option<String>,
    pub training_sparsity_mismatches: usize,
    pub heldout_sparsity_mismatches: usize,
    pub training_stationarity_max: Option<f64>,
    pub stationarity: Vec<StationarityRecord>,
    pub heldout: Vec<HeldOutError>,
    pub peak_error_w: Option<f64>,
    pub transition_dominates: bool,
    pub time_domain: Option<TimeDomainRms>,
    pub epsilon: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Every other sample for training (starting with the first), the rest held out.
pub fn alternate_split(
    samples: &[(StateSpaceModel, OperatingPoint)],
) -> (
    Vec<(StateSpaceModel, OperatingPoint)>,
    Vec<(StateSpaceModel, OperatingPoint)>,
) {
    let train = samples.iter().step_by(2).cloned().collect();
    let held = samples.iter().skip(1).step_by(2).cloned().collect();
    (train, held)
}

/// Smoothed step from 8 to 18 m/s at t = 312 s over 600 s, sampled at 0.25 s.
/// The time average is 12.8 m/s.
pub fn step_wind_scenario() -> Trajectory {
    let t = uniform_grid(0.0, 600.0, 0.25);
    let w = t
        .iter()
        .map(|&t| 13.0 + 5.0 * ((t - 312.0) / 4.0).tanh())
        .collect();
    Trajectory::scalar(t, w, "w").expect("valid grid")
}

fn residual(s: &Surrogate, op: &OperatingPoint) -> Option<f64> {
    let x_p = PlantDesign {
        c_s: op.x_p[0],
        c_d: op.x_p[1],
    };
    s.dynamics(op.xi_o.as_slice(), op.u_o.as_slice(), op.w, &x_p)
        .ok()
        .map(|f| f.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

fn rel_entry_error(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    let scale = b.abs().max();
    if a.is_empty() {
        return 0.0;
    }
    let diff = (a - b).abs().max();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn scored(m: &StateSpaceModel, opts: &ValidationOptions) -> Result<StateSpaceModel> {
    let o: Vec<&str> = opts.outputs.iter().map(String::as_str).collect();
    let i: Vec<&str> = opts.inputs.iter().map(String::as_str).collect();
    m.subsystem_by_label(&o, &i)
}

fn score_one(
    lpv: &LpvModel,
    m: &StateSpaceModel,
    op: &OperatingPoint,
    opts: &ValidationOptions,
) -> Result<HeldOutError> {
    let pt = lpv.eval(op.w)?;
    let (sub_lpv, sub_true) = (scored(&pt.model, opts)?, scored(m, opts)?);
    let err = hinf_error(&sub_lpv, &sub_true, &opts.hinf)?;
    let norm = hinf_norm(&sub_true, &opts.hinf)?;
    // Nearest training sample; ties keep the better neighbour.
    let dist = |w: f64| (w - op.w).abs();
    let best = lpv
        .samples()
        .iter()
        .map(|(_, o)| dist(o.w))
        .fold(f64::INFINITY, f64::min);
    let mut nearest = (f64::INFINITY, f64::NAN);
    for (tm, to) in lpv.samples() {
        if dist(to.w) <= best * (1.0 + 1e-12) {
            let e = hinf_error(&scored(tm, opts)?, &sub_true, &opts.hinf)?;
            if e < nearest.0 {
                nearest = (e, to.w);
            }
        }
    }
    let max_entry_error = [
        rel_entry_error(&pt.model.a, &m.a),
        rel_entry_error(&pt.model.b, &m.b),
        rel_entry_error(&pt.model.c, &m.c),
        rel_entry_error(&pt.model.d, &m.d),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let masks = lpv.masks();
    let own = [mask_of(&m.a), mask_of(&m.b), mask_of(&m.c), mask_of(&m.d)];
    let sparsity_mismatches = own
        .iter()
        .zip([&masks.a, &masks.b, &masks.c, &masks.d])
        .map(|(o, u)| o.iter().zip(u.iter()).filter(|(x, y)| x != y).count())
        .sum();
    Ok(HeldOutError {
        w: op.w,
        hinf_error: err,
        reference_norm: norm,
        relative_error: if norm > 0.0 { err / norm } else { err },
        nearest_lti_error: nearest.0,
        nearest_w: nearest.1,
        max_entry_error,
        eigen_deviation: eigenvalue_deviation(
            &sorted_eigenvalues(&pt.model.a),
            &sorted_eigenvalues(&m.a),
        ),
        sparsity_mismatches,
    })
}

/// Root-mean-square difference of two equally gridded signals.
fn rms(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

/// Compares LPV and frozen-LTI (linearized at the mean wind) simulations
/// with the nonlinear surrogate under trim-scheduled inputs.
pub fn time_domain_comparison(
    lpv: &LpvModel,
    surrogate: &Surrogate,
    wind: &Trajectory,
) -> Result<TimeDomainRms> {
    let x_p = PlantDesign {
        c_s: lpv.plant()[0],
        c_d: lpv.plant()[1],
    };
    let grid = uniform_grid(wind.start(), wind.end(), DEFAULT_STEP);
    let u = surrogate.trim_schedule(wind, &x_p)?;
    let w0 = wind.rows()[0][0];
    let xi0 = surrogate.trim(w0, &x_p)?.xi_o;
    let truth = surrogate.simulate_nonlinear(wind, &u, xi0.as_slice(), &x_p, &grid)?;

    let mut du = Vec::with_capacity(wind.len());
    for (r, ur) in wind.rows().iter().zip(u.rows()) {
        let uo = lpv.eval(r[0])?.op.u_o;
        du.push(vec![ur[0] - uo[0], ur[1] - uo[1]]);
    }
    let u_delta = Trajectory::new(wind.times().to_vec(), du, u.labels().to_vec())?;
    let xd0: Vec<f64> = (&xi0 - &lpv.eval(w0)?.op.xi_o).iter().copied().collect();
    let lpv_sim = simulate_lpv(lpv, wind, &u_delta, &xd0, &grid)?;

    let w_avg = wind.mean(0);
    let (m, op) = surrogate.linearize(w_avg, &x_p)?;
    let uo: Vec<f64> = op.u_o.iter().copied().collect();
    let u_lti = Trajectory::new(
        u.times().to_vec(),
        u.rows()
            .iter()
            .map(|r| vec![r[0] - uo[0], r[1] - uo[1]])
            .collect(),
        u.labels().to_vec(),
    )?;
    let xl0: Vec<f64> = (&xi0 - &op.xi_o).iter().copied().collect();
    let lti_sim = simulate_lti(&m, &op, &u_lti, &xl0, &grid)?;

    let ch = |t: &Trajectory, k: usize| t.channel(k);
    let (th, om) = (idx::THETA, idx::OMEGA);
    Ok(TimeDomainRms {
        w_avg,
        theta_lpv: rms(&ch(&lpv_sim.absolute, th), &ch(&truth, th)),
        omega_lpv: rms(&ch(&lpv_sim.absolute, om), &ch(&truth, om)),
        theta_lti: rms(&ch(&lti_sim.absolute, th), &ch(&truth, th)),
        omega_lti: rms(&ch(&lti_sim.absolute, om), &ch(&truth, om)),
    })
}

/// Runs the structure, sparsity, stationarity, matrix, frequency and time
/// domain checks of `lpv` against held-out linearizations.
pub fn validate(
    lpv: &LpvModel,
    heldout: &[(StateSpaceModel, OperatingPoint)],
    surrogate: Option<&Surrogate>,
    opts: &ValidationOptions,
) -> ValidationReport {
    let mut failures = Vec::new();
    let mut structure_message = None;
    if !heldout.is_empty() {
        let mut all = vec![lpv.samples()[0].clone()];
        all.extend(heldout.iter().cloned());
        if let Err(e) = check_structure(&all) {
            structure_message = Some(e.to_string());
            failures.push(format!("structure: {e}"));
        }
    }
    let structure_ok = structure_message.is_none();

    let mut records = Vec::new();
    if structure_ok {
        for (m, op) in heldout {
            match score_one(lpv, m, op, opts) {
                Ok(r) => records.push(r),
                Err(e) => failures.push(format!("w = {}: {e}", op.w)),
            }
        }
    }
    for r in &records {
        if !(r.relative_error <= opts.epsilon) {
            failures.push(format!(
                "w = {}: relative H∞ error {:.3e} above {}",
                r.w, r.relative_error, opts.epsilon
            ));
        }
    }

    let (training_stationarity_max, stationarity) = match surrogate {
        Some(s) => {
            let train = lpv
                .samples()
                .iter()
                .filter_map(|(_, op)| residual(s, op))
                .fold(0.0, f64::max);
            let held = heldout
                .iter()
                .filter_map(|(_, op)| {
                    let pt = lpv.eval(op.w).ok()?;
                    Some(StationarityRecord {
                        w: op.w,
                        residual: residual(s, &pt.op)?,
                    })
                })
                .collect();
            (Some(train), held)
        }
        None => (None, Vec::new()),
    };

    let peak = records
        .iter()
        .max_by(|a, b| a.hinf_error.total_cmp(&b.hinf_error));
    let peak_error_w = peak.map(|r| r.w);
    let transition_dominates = peak_error_w
        .map(|w| (opts.transition.0..=opts.transition.1).contains(&w))
        .unwrap_or(false);

    let time_domain = match surrogate {
        Some(s) if opts.time_domain => {
            match time_domain_comparison(lpv, s, &step_wind_scenario()) {
                Ok(t) => Some(t),
                Err(e) => {
                    failures.push(format!("time domain: {e}"));
                    None
                }
            }
        }
        _ => None,
    };

    ValidationReport {
        structure_ok,
        structure_message,
        training_sparsity_mismatches: lpv.sparsity_mismatches(),
        heldout_sparsity_mismatches: records.iter().map(|r| r.sparsity_mismatches).sum(),
        training_stationarity_max,
        stationarity,
        heldout: records,
        peak_error_w,
        transition_dominates,
        time_domain,
        epsilon: opts.epsilon,
        pass: failures.is_empty(),
        failures,
    }
}

impl ValidationReport {
    /// One row per held-out wind speed.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use crate::trajectory::fmt_num;
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "w",
            "hinf_error",
            "reference_norm",
            "relative_error",
            "nearest_lti_error",
            "nearest_w",
            "max_entry_error",
            "eigen_deviation",
        ])?;
        for r in &self.heldout {
            w.write_record([
                fmt_num(r.w),
                fmt_num(r.hinf_error),
                fmt_num(r.reference_norm),
                fmt_num(r.relative_error),
                fmt_num(r.nearest_lti_error),
                fmt_num(r.nearest_w),
                fmt_num(r.max_entry_error),
                fmt_num(r.eigen_deviation),
            ])?;
        }
        w.flush().map_err(|e| crate::error::Error::io(path, e))?;
        Ok(())
    }
}
