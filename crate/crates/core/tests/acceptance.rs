//! Acceptance criteria A1–A11, one PASS/FAIL line each.
//!
//! Exits 0 regardless of the outcome so the report is always produced; set
//! `FOWT_CCD_STRICT=1` to exit 1 when any criterion fails.

mod common;

use std::path::Path;
use std::time::Instant;

use fowt_ccd::ccd::{
    aep, cost_sensitivity, generate_wind_cases, run_sweep, solve_case, Axis, CaseStatus, CostModel,
    SweepConfig, SweepOptions, WindConfig, CAPITAL_AT_LOWER, CAPITAL_AT_UPPER,
};
use fowt_ccd::dtqp::{
    average_power, solve_ocp, transcribe_lqdo, Lqdo, LqdoStage, OcProblem, OcSettings, OMEGA_MAX_2,
};
use fowt_ccd::lpv::{
    alternate_split, build_plant_family, default_wind_samples, step_wind_scenario,
    time_domain_comparison, validate, LpvModel, LpvSource, PlantLpvFamily, ValidationOptions,
};
use fowt_ccd::lti::{hinf_error, hinf_norm, HinfOptions};
use fowt_ccd::qp::{solve, QpOptions, QpStatus};
use fowt_ccd::surrogate::{PLANT_LOWER, PLANT_UPPER};
use fowt_ccd::trajectory::linspace;
use fowt_ccd::{OperatingPoint, PlantDesign, StateSpaceModel, Surrogate};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASE_7: usize = 6;

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn record(&mut self, id: &'static str, pass: bool, detail: String) {
        println!("{id:<4} {}  {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn samples(x_p: &PlantDesign) -> Vec<(StateSpaceModel, OperatingPoint)> {
    let s = Surrogate::reference();
    default_wind_samples()
        .iter()
        .map(|&w| s.linearize(w, x_p))
        .collect::<Result<_, _>>()
        .expect("reference surrogate trims over the sample range")
}

fn scored(m: &StateSpaceModel) -> StateSpaceModel {
    m.subsystem_by_label(&["omega_g", "theta_p"], &["tau_g", "beta"])
        .unwrap()
}

fn a1(r: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_z, mut worst_res, mut bad) = (0.0f64, 0.0f64, 0);
    for _ in 0..200 {
        let n = rng.random_range(2..=30);
        let m = rng.random_range(0..=4usize).min(n - 1);
        let p = rng.random_range(1..=15);
        let dense = common::random_qp(&mut rng, n, m, p);
        let (z_ref, _) = dense.enumerate().expect("feasible instance");
        let sol = solve(&dense.to_problem(), &QpOptions::default());
        if sol.status != QpStatus::Optimal {
            bad += 1;
            continue;
        }
        let scale = 1.0 + z_ref.amax();
        let dz = sol
            .z
            .iter()
            .zip(z_ref.iter())
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max);
        worst_z = worst_z.max(dz);
        worst_res = worst_res.max(sol.residuals.max());
    }
    let secs = start.elapsed().as_secs_f64();
    r.record(
        "A1",
        bad == 0 && worst_z <= 1e-6 && worst_res < 1e-8 && secs < 30.0,
        format!("200 random QPs: max |Δz| {worst_z:.2e}, max KKT residual {worst_res:.2e}, {bad} not optimal, {secs:.1} s"),
    );
}

fn a2(r: &mut Report) {
    let start = Instant::now();
    let nt = 2500;
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let mut st = LqdoStage::free(a, b);
    st.q_hess.push((2, 2, 2.0));
    let p = Lqdo {
        n_states: 2,
        n_inputs: 1,
        times: linspace(0.0, 1.0, nt),
        stages: vec![st; nt],
        initial: Some(vec![0.0, 0.0]),
        terminal: Some(vec![1.0, 0.0]),
        scale: vec![1.0; 3],
    };
    let t = transcribe_lqdo(&p).unwrap();
    let sol = solve(&t.qp, &QpOptions::default());
    let v = t.unscale(&sol.z);
    // Minimum-effort rest-to-rest transfer: x = 3t² − 2t³, v = 6t − 6t².
    let err = t
        .times
        .iter()
        .zip(&v)
        .map(|(ti, vi)| {
            let x = 3.0 * ti * ti - 2.0 * ti.powi(3);
            let xd = 6.0 * ti - 6.0 * ti * ti;
            (vi[0] - x).abs().max((vi[1] - xd).abs())
        })
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    r.record(
        "A2",
        sol.status == QpStatus::Optimal && err < 1e-4 && secs < 10.0,
        format!("double integrator N={nt}: max state error {err:.2e}, {secs:.2} s"),
    );
}

fn ocp(source: &dyn LpvSource, case: usize, set: OcSettings) -> fowt_ccd::dtqp::OcSolution {
    let cases = generate_wind_cases(&WindConfig::default()).unwrap();
    solve_ocp(
        &OcProblem {
            source,
            wind: &cases[case].profile,
            settings: set,
        },
        &QpOptions::default(),
    )
    .unwrap()
}

fn a3(r: &mut Report, lpv: &LpvModel) {
    let at = |mesh| {
        ocp(
            lpv,
            CASE_7,
            OcSettings {
                mesh,
                ..OcSettings::default()
            },
        )
    };
    let (coarse, fine) = (at(1250), at(2500));
    let rel = (coarse.objective - fine.objective).abs() / fine.objective.abs();
    r.record(
        "A3",
        coarse.status == QpStatus::Optimal && fine.status == QpStatus::Optimal && rel < 1e-4,
        format!(
            "case 7 objective {:.8} (N=1250) vs {:.8} (N=2500): relative change {rel:.2e}",
            coarse.objective, fine.objective
        ),
    );
}

fn a4(r: &mut Report, all: &[(StateSpaceModel, OperatingPoint)]) {
    let opts = HinfOptions::default();
    let (train, held) = alternate_split(all);
    let lpv = LpvModel::build(train.clone()).unwrap();
    let train_err = train
        .iter()
        .map(|(m, op)| hinf_error(&lpv.eval(op.w).unwrap().model, m, &opts).unwrap())
        .fold(0.0, f64::max);
    let vopts = ValidationOptions {
        time_domain: false,
        ..ValidationOptions::default()
    };
    let rep = validate(&lpv, &held, None, &vopts);
    let peak = rep.peak_error_w.unwrap_or(f64::NAN);
    let beaten: Vec<f64> = rep
        .heldout
        .iter()
        .filter(|h| h.hinf_error > h.nearest_lti_error)
        .map(|h| h.w)
        .collect();
    r.record(
        "A4",
        train_err <= 1e-10 && (8.0..=12.0).contains(&peak) && beaten.is_empty() && rep.heldout.len() == held.len(),
        format!(
            "training H∞ error {train_err:.2e}; held-out peak at {peak} m/s; {} held-out points, LPV worse than nearest LTI at {beaten:?}",
            rep.heldout.len()
        ),
    );
}

fn a5(r: &mut Report, lpv: &LpvModel) {
    let t = time_domain_comparison(lpv, &Surrogate::reference(), &step_wind_scenario()).unwrap();
    let (rt, ro) = (t.theta_lpv / t.theta_lti, t.omega_lpv / t.omega_lti);
    r.record(
        "A5",
        rt <= 0.5 && ro <= 0.5,
        format!(
            "step wind: RMS ratio LPV/LTI({:.2} m/s) Θ_p {rt:.3}, ω_g {ro:.3}",
            t.w_avg
        ),
    );
}

fn a6(r: &mut Report, family: &PlantLpvFamily) {
    let s = Surrogate::reference();
    let opts = HinfOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut rel = Vec::new();
    for _ in 0..25 {
        let x_p = PlantDesign::new(
            rng.random_range(PLANT_LOWER[0]..=PLANT_UPPER[0]),
            rng.random_range(PLANT_LOWER[1]..=PLANT_UPPER[1]),
        )
        .unwrap();
        let direct = scored(&s.linearize(12.0, &x_p).unwrap().0);
        let interp = scored(&family.eval_plant(&x_p, 12.0).unwrap().model);
        rel.push(hinf_error(&interp, &direct, &opts).unwrap() / hinf_norm(&direct, &opts).unwrap());
    }
    let mean = rel.iter().sum::<f64>() / rel.len() as f64;
    let max = rel.iter().copied().fold(0.0, f64::max);
    r.record(
        "A6",
        mean <= 0.01,
        format!("25 random designs at 12 m/s: mean relative H∞ error {mean:.2e}, max {max:.2e}"),
    );
}

fn a7(r: &mut Report, lpv: &LpvModel) {
    let at = |deg: f64| {
        let mut set = OcSettings::default();
        set.limits = set.limits.with_theta_deg(deg);
        ocp(lpv, CASE_7, set)
    };
    let (tight, loose) = (at(4.0), at(6.0));
    let frac = tight
        .activity
        .iter()
        .find(|a| a.name == "theta_p_max")
        .map(|a| a.fraction)
        .unwrap_or(0.0);
    let (p4, p6) = (average_power(&tight).ok(), average_power(&loose).ok());
    let pass = tight.status == QpStatus::Optimal
        && tight.max_violation <= 1e-6
        && frac > 0.0
        && matches!((p4, p6), (Some(a), Some(b)) if a < b);
    r.record(
        "A7",
        pass,
        format!(
            "case 7 at 4°: {:?}, max violation {:.1e}, Θ_p limit active on {:.3} of the mesh; P̄ {:?} W (4°) vs {:?} W (6°)",
            tight.status, tight.max_violation, frac, p4, p6
        ),
    );
}

fn a8(r: &mut Report, family: &PlantLpvFamily) {
    let start = Instant::now();
    let cases = generate_wind_cases(&WindConfig::default()).unwrap();
    let picks = [2, CASE_7, 9];
    let levels = [3.0, 4.0, 5.0, 6.0, 7.0];
    let (mut solves, mut drops, mut worst) = (0, Vec::new(), 0.0f64);
    for c_s in [
        PLANT_LOWER[0],
        0.5 * (PLANT_LOWER[0] + PLANT_UPPER[0]),
        PLANT_UPPER[0],
    ] {
        for c_d in [
            PLANT_LOWER[1],
            0.5 * (PLANT_LOWER[1] + PLANT_UPPER[1]),
            PLANT_UPPER[1],
        ] {
            let slice = family.slice(PlantDesign { c_s, c_d }).unwrap();
            for &k in &picks {
                // Infeasible subproblems produce no energy.
                let power = |set: OcSettings| {
                    let out = solve_case(&slice, &cases[k], set, &QpOptions::default());
                    (out.status == CaseStatus::Optimal)
                        .then_some(out.p_bar)
                        .flatten()
                        .unwrap_or(0.0)
                };
                let mut chain: Vec<f64> = levels
                    .iter()
                    .map(|&deg| {
                        let mut set = OcSettings::default();
                        set.limits = set.limits.with_theta_deg(deg);
                        power(set)
                    })
                    .collect();
                let mut fast = OcSettings::default();
                fast.limits = fast.limits.with_theta_deg(7.0).with_omega_max(OMEGA_MAX_2);
                chain.push(power(fast));
                solves += chain.len();
                for w in chain.windows(2) {
                    if w[1] < w[0] {
                        let rel = (w[0] - w[1]) / w[0];
                        worst = worst.max(rel);
                        drops.push(format!("({c_s}, {c_d}, case {})", cases[k].id));
                    }
                }
            }
        }
    }
    drops.dedup();
    let secs = start.elapsed().as_secs_f64();
    r.record(
        "A8",
        drops.is_empty() && secs < 600.0,
        format!(
            "{solves} solves in {secs:.0} s; P̄ decreased under relaxation in {} chains (largest relative drop {worst:.2e}) {drops:?}",
            drops.len()
        ),
    );
}

fn a9(r: &mut Report) {
    let cost = CostModel::default();
    let lo = cost.capital(&PlantDesign {
        c_s: 36.0,
        c_d: 6.0,
    });
    let hi = cost.capital(&PlantDesign {
        c_s: 78.0,
        c_d: 24.0,
    });
    let cs = linspace(PLANT_LOWER[0], PLANT_UPPER[0], 60);
    let cd = linspace(PLANT_LOWER[1], PLANT_UPPER[1], 60);
    let grid: Vec<Vec<f64>> = cs
        .iter()
        .map(|&c_s| {
            cd.iter()
                .map(|&c_d| cost.capital(&PlantDesign { c_s, c_d }))
                .collect()
        })
        .collect();
    let mut monotone = true;
    for i in 0..60 {
        for j in 0..60 {
            if i > 0 && grid[i][j] <= grid[i - 1][j] || j > 0 && grid[i][j] <= grid[i][j - 1] {
                monotone = false;
            }
        }
    }
    let weights = vec![1.0 / 11.0; 11];
    let e = aep(&[Some(15e6); 11], &weights, 0.15).unwrap();
    r.record(
        "A9",
        lo == CAPITAL_AT_LOWER && hi == CAPITAL_AT_UPPER && monotone && e == 7446.0,
        format!("C_capital(36, 6) = {lo:?}, C_capital(78, 24) = {hi:?}, strictly monotone on 60×60: {monotone}, all-rated E_n = {e:?} h"),
    );
}

fn a10_config() -> SweepConfig {
    let mut cfg = SweepConfig {
        c_s: Axis {
            lower: PLANT_LOWER[0],
            upper: PLANT_UPPER[0],
            count: 10,
        },
        c_d: Axis {
            lower: PLANT_LOWER[1],
            upper: PLANT_UPPER[1],
            count: 10,
        },
        theta_levels_deg: vec![3.0, 6.0],
        ..SweepConfig::default()
    };
    cfg.oc.mesh = 500;
    cfg
}

fn a10(r: &mut Report, family: &PlantLpvFamily, out: &Path) {
    let cfg = a10_config();
    let (res, stats) = run_sweep(&cfg, family, &SweepOptions::default()).unwrap();
    res.write_outputs(out, &stats, &cfg.f_corners).unwrap();
    let census = res.census();
    let six = res.optima(&cfg.cost)[1];
    let mid_cs = 0.5 * (PLANT_LOWER[0] + PLANT_UPPER[0]);
    let mid_cd = 0.5 * (PLANT_LOWER[1] + PLANT_UPPER[1]);
    let at = |f: [f64; 2]| cost_sensitivity(&res, &cfg.cost, &[f])[1];
    let (low, high) = (at([0.8, 0.8]), at([1.2, 1.2]));
    // Corners ordered by rising c_d cost share.
    let by_share = [at([1.2, 0.8]), six, at([0.8, 1.2])];
    let cd_nonincreasing = by_share.windows(2).all(|w| w[1].c_d <= w[0].c_d);
    let pass = census[0].infeasible_pairs >= census[1].infeasible_pairs
        && six.c_s < mid_cs
        && six.c_d > mid_cd
        && low.lcoe <= high.lcoe
        && cd_nonincreasing
        && stats.runtime_s < 1800.0;
    r.record(
        "A10",
        pass,
        format!(
            "infeasible pairs {} (3°) vs {} (6°); 6° optimum ({:.2}, {:.2}) LCOE {:.2}; corners [0.8,0.8] {:.2} ≤ [1.2,1.2] {:.2}; argmin c_d by c_d share {:?}; {} solves on {} workers in {:.0} s",
            census[0].infeasible_pairs,
            census[1].infeasible_pairs,
            six.c_s,
            six.c_d,
            six.lcoe,
            low.lcoe,
            high.lcoe,
            by_share.map(|o| o.c_d),
            stats.solves,
            stats.workers,
            stats.runtime_s
        ),
    );
}

fn a11(r: &mut Report, family: &PlantLpvFamily, first: &Path, second: &Path) {
    let cfg = a10_config();
    // A different worker count must not change anything.
    let (res, stats) = run_sweep(
        &cfg,
        family,
        &SweepOptions {
            workers: Some(2),
            cache_dir: None,
        },
    )
    .unwrap();
    res.write_outputs(second, &stats, &cfg.f_corners).unwrap();
    let mut differing = Vec::new();
    let mut files = Vec::new();
    for entry in std::fs::read_dir(first).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".csv") {
            let same = std::fs::read(first.join(&name)).unwrap()
                == std::fs::read(second.join(&name)).unwrap();
            if !same {
                differing.push(name.clone());
            }
            files.push(name);
        }
    }
    files.sort();
    r.record(
        "A11",
        differing.is_empty() && files.len() == 5,
        format!("rerun compared {files:?}; differing {differing:?}"),
    );
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    let nominal = samples(&PlantDesign::nominal());
    let lpv = LpvModel::build(nominal.clone()).unwrap();
    let family = build_plant_family(
        &Surrogate::reference(),
        &linspace(PLANT_LOWER[0], PLANT_UPPER[0], 7),
        &linspace(PLANT_LOWER[1], PLANT_UPPER[1], 7),
        &default_wind_samples(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();

    a1(&mut r);
    a2(&mut r);
    a3(&mut r, &lpv);
    a4(&mut r, &nominal);
    a5(&mut r, &lpv);
    a6(&mut r, &family);
    a7(&mut r, &lpv);
    a8(&mut r, &family);
    a9(&mut r);
    a10(&mut r, &family, &dir.path().join("first"));
    a11(
        &mut r,
        &family,
        &dir.path().join("first"),
        &dir.path().join("second"),
    );

    println!("{} of 11 criteria passed", 11 - r.failed.len());
    if !r.failed.is_empty() && std::env::var("FOWT_CCD_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
