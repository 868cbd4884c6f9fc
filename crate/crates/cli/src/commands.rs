use std::path::{Path, PathBuf};

use fowt_ccd::ccd::{
    cost_sensitivity, generate_wind_cases, run_sweep, Optimum, SweepConfig, SweepOptions,
    SweepResult, WindConfig,
};
use fowt_ccd::dtqp::{average_power, solve_ocp, OcProblem, OcSettings, OMEGA_MAX_1, OMEGA_MAX_2};
use fowt_ccd::io::{read_json, write_json};
use fowt_ccd::lpv::{
    alternate_split, build_plant_family, default_wind_samples, load_lpv, validate, LpvManifest,
    LpvModel, LpvSource, ValidationOptions, MANIFEST_FILE,
};
use fowt_ccd::lti::ModelRecord;
use fowt_ccd::qp::QpOptions;
use fowt_ccd::surrogate::{PLANT_LOWER, PLANT_UPPER};
use fowt_ccd::trajectory::linspace;
use fowt_ccd::{OperatingPoint, PlantDesign, StateSpaceModel, Surrogate};
use serde::de::DeserializeOwned;

use crate::exit::{CmdResult, Exit, FAILURE, INFEASIBLE, IO, VALIDATION};
use crate::{Format, Split};

fn parse_plant(s: &str) -> Result<PlantDesign, Exit> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Exit::usage(format!("--plant {s}: {e}")))?;
    match v[..] {
        [c_s, c_d] => {
            PlantDesign::new(c_s, c_d).map_err(|e| Exit::usage(format!("--plant {s}: {e}")))
        }
        _ => Err(Exit::usage(format!("--plant expects c_s,c_d, got {s}"))),
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>, Exit> {
    let v: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Exit::usage(format!("--wind-range {s}: {e}")))?;
    let [a, b, step] = v[..] else {
        return Err(Exit::usage(format!(
            "--wind-range expects start:stop:step, got {s}"
        )));
    };
    if !(step > 0.0 && b >= a) {
        return Err(Exit::usage(format!("--wind-range {s} is empty")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| a + k as f64 * step).collect())
}

/// Reads a JSON config: unreadable files are I/O errors, bad contents
/// (including unknown keys) are validation errors.
fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, Exit> {
    let text = std::fs::read_to_string(path).map_err(|e| Exit::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Exit::usage(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(|e| Exit::io(dir, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Exit {
    Exit::new(IO, format!("{}: {e}", path.display()))
}

pub fn trim(range: &str, plant: &str, out: &Path) -> CmdResult {
    let x_p = parse_plant(plant)?;
    let winds = parse_range(range)?;
    create_dir(out)?;
    let s = Surrogate::reference();
    let path = out.join("trim.csv");
    let mut table = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    let mut failures = Vec::new();
    let mut header = false;
    for (k, &w) in winds.iter().enumerate() {
        let (m, op) = match s.linearize(w, &x_p) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("w = {w}: {e}");
                failures.push(w);
                continue;
            }
        };
        ModelRecord::from_parts(&m, &op).write(&out.join(format!("model_{k:03}.json")))?;
        if !header {
            let mut h = vec!["w".to_string()];
            h.extend(m.labels.states.iter().cloned());
            h.extend(m.labels.inputs.iter().cloned());
            // Passthrough outputs repeat a state column.
            h.extend(
                m.labels
                    .outputs
                    .iter()
                    .filter(|o| !m.labels.states.contains(o))
                    .cloned(),
            );
            table.write_record(&h).map_err(|e| csv_err(&path, e))?;
            header = true;
        }
        let row: Vec<String> = std::iter::once(w)
            .chain(op.xi_o.iter().copied())
            .chain(op.u_o.iter().copied())
            .chain(
                m.g.iter()
                    .zip(&m.labels.outputs)
                    .filter(|(_, o)| !m.labels.states.contains(o))
                    .map(|(v, _)| *v),
            )
            .map(|v| format!("{v:?}"))
            .collect();
        table.write_record(&row).map_err(|e| csv_err(&path, e))?;
    }
    table.flush().map_err(|e| Exit::io(&path, e))?;
    println!(
        "{} models written to {}",
        winds.len() - failures.len(),
        out.display()
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Exit::new(
            FAILURE,
            format!("trim failed at {failures:?} m/s"),
        ))
    }
}

/// Model records in `dir`, sorted by wind speed.
fn read_models(dir: &Path) -> Result<Vec<(StateSpaceModel, OperatingPoint)>, Exit> {
    let entries = std::fs::read_dir(dir).map_err(|e| Exit::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.ends_with(MANIFEST_FILE))
        .collect();
    paths.sort();
    let mut all = paths
        .iter()
        .map(|p| ModelRecord::read(p)?.into_parts())
        .collect::<Result<Vec<_>, _>>()?;
    all.sort_by(|a, b| a.1.w.total_cmp(&b.1.w));
    if all.len() < 4 {
        return Err(Exit::usage(format!(
            "{} holds {} models, at least 4 are needed",
            dir.display(),
            all.len()
        )));
    }
    Ok(all)
}

type Samples = Vec<(StateSpaceModel, OperatingPoint)>;

fn split_samples(all: Samples, split: Split) -> (Samples, Samples) {
    match split {
        Split::Alternate => alternate_split(&all),
        Split::None => (all.clone(), all),
    }
}

pub fn lpv_build(
    models: Option<&Path>,
    split: Split,
    family: Option<&str>,
    out: &Path,
) -> CmdResult {
    if let Some(spec) = family {
        let counts: Vec<usize> = spec
            .split('x')
            .map(|p| p.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|e| Exit::usage(format!("--family {spec}: {e}")))?;
        let [ncs, ncd] = counts[..] else {
            return Err(Exit::usage(format!("--family expects NxM, got {spec}")));
        };
        if ncs < 2 || ncd < 2 {
            return Err(Exit::usage("--family needs at least 2 nodes per axis"));
        }
        let fam = build_plant_family(
            &Surrogate::reference(),
            &linspace(PLANT_LOWER[0], PLANT_UPPER[0], ncs),
            &linspace(PLANT_LOWER[1], PLANT_UPPER[1], ncd),
            &default_wind_samples(),
        )?;
        fam.save(out)?;
        println!(
            "plant family {ncs}x{ncd} written to {} ({})",
            out.display(),
            fam.fingerprint()
        );
        return Ok(());
    }
    let dir = models.ok_or_else(|| Exit::usage("--models or --family is required"))?;
    let (train, _) = split_samples(read_models(dir)?, split);
    let lpv = LpvModel::build(train)?;
    lpv.save(out)?;
    println!(
        "LPV model from {} samples written to {} ({})",
        lpv.samples().len(),
        out.display(),
        LpvSource::fingerprint(&lpv)
    );
    Ok(())
}

pub fn lpv_validate(
    models: &Path,
    split: Split,
    epsilon: f64,
    time_domain: bool,
    out: &Path,
) -> CmdResult {
    let (train, held) = split_samples(read_models(models)?, split);
    let lpv = LpvModel::build(train)?;
    let opts = ValidationOptions {
        epsilon,
        time_domain,
        ..ValidationOptions::default()
    };
    let s = Surrogate::reference();
    let rep = validate(&lpv, &held, Some(&s), &opts);
    create_dir(out)?;
    write_json(&out.join("validation.json"), &rep)?;
    rep.write_csv(&out.join("validation.csv"))?;
    let peak = rep.heldout.iter().map(|h| h.hinf_error).fold(0.0, f64::max);
    match rep.peak_error_w {
        Some(w) => println!(
            "{} held-out models, peak H∞ error {peak:.3e} at {w} m/s",
            rep.heldout.len()
        ),
        None => println!("no held-out models scored"),
    }
    if let Some(t) = &rep.time_domain {
        println!(
            "step wind RMS, LPV vs LTI({:.2} m/s): theta_p {:.3e} vs {:.3e}, omega_g {:.3e} vs {:.3e}",
            t.w_avg, t.theta_lpv, t.theta_lti, t.omega_lpv, t.omega_lti
        );
    }
    if rep.pass {
        Ok(())
    } else {
        Err(Exit::new(VALIDATION, rep.failures.join("; ")))
    }
}

pub struct OcArgs {
    pub lpv: Option<PathBuf>,
    pub plant: String,
    pub case: usize,
    pub theta_max: Option<f64>,
    pub omega_max: Option<String>,
    pub mesh: Option<usize>,
    pub t_f: Option<f64>,
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

fn parse_omega(s: &str) -> Result<f64, Exit> {
    match s.trim() {
        "1" => Ok(OMEGA_MAX_1),
        "2" => Ok(OMEGA_MAX_2),
        v => v
            .parse::<f64>()
            .map_err(|e| Exit::usage(format!("--omega-max {s}: {e}"))),
    }
}

fn nominal_lpv(x_p: &PlantDesign) -> Result<LpvModel, Exit> {
    let s = Surrogate::reference();
    let samples = default_wind_samples()
        .iter()
        .map(|&w| s.linearize(w, x_p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LpvModel::build(samples)?)
}

pub fn oc_solve(a: &OcArgs) -> CmdResult {
    let mut set: OcSettings = match &a.config {
        Some(p) => read_config(p)?,
        None => OcSettings::default(),
    };
    if let Some(deg) = a.theta_max {
        set.limits = set.limits.with_theta_deg(deg);
    }
    if let Some(w) = &a.omega_max {
        set.limits = set.limits.with_omega_max(parse_omega(w)?);
    }
    if let Some(n) = a.mesh {
        set.mesh = n;
    }
    if let Some(t) = a.t_f {
        set.t_f = t;
    }
    set.validate()?;
    let x_p = parse_plant(&a.plant)?;
    let wind = WindConfig {
        seed: a.seed.unwrap_or(WindConfig::default().seed),
        t_f: set.t_f.max(WindConfig::default().t_f),
        ..WindConfig::default()
    };
    let cases = generate_wind_cases(&wind)?;
    let case = cases
        .get(a.case.wrapping_sub(1))
        .ok_or_else(|| Exit::usage(format!("--case must be in 1..={}", cases.len())))?;

    let stored = a.lpv.as_deref().map(load_lpv).transpose()?;
    let built;
    let slice;
    let source: &dyn LpvSource = match &stored {
        Some(LpvManifest::Model(m)) => m,
        Some(LpvManifest::Family(f)) => {
            slice = f.slice(x_p)?;
            &slice
        }
        None => {
            built = nominal_lpv(&x_p)?;
            &built
        }
    };
    let sol = solve_ocp(
        &OcProblem {
            source,
            wind: &case.profile,
            settings: set,
        },
        &QpOptions::default(),
    )?;
    sol.write(&a.out)?;
    match average_power(&sol) {
        Ok(p) => {
            println!(
                "case {} ({} m/s): {:?}, mean power {:.6e} W, objective {:.10}",
                case.id, case.mean, sol.status, p, sol.objective
            );
            Ok(())
        }
        Err(_) => Err(Exit::new(
            INFEASIBLE,
            format!(
                "case {} ({} m/s): subproblem {:?}",
                case.id, case.mean, sol.status
            ),
        )),
    }
}

pub fn sweep(
    config: &Path,
    out: &Path,
    workers: Option<usize>,
    cache_dir: Option<PathBuf>,
) -> CmdResult {
    let cfg: SweepConfig = read_config(config)?;
    cfg.validate()?;
    if workers == Some(0) {
        return Err(Exit::usage("worker count must be positive"));
    }
    let family = cfg.plant_family()?;
    let (res, stats) = run_sweep(&cfg, &family, &SweepOptions { workers, cache_dir })?;
    res.write_outputs(out, &stats, &cfg.f_corners)?;
    println!(
        "{} solves ({} cached) on {} workers in {:.1} s",
        stats.solves, stats.cache_hits, stats.workers, stats.runtime_s
    );
    for (o, c) in res.optima(&cfg.cost).iter().zip(res.census()) {
        println!(
            "{}°: optimum ({}, {}) LCOE {:.3} $/MWh, {} infeasible pairs",
            o.theta_max_deg, o.c_s, o.c_d, o.lcoe, c.infeasible_pairs
        );
    }
    Ok(())
}

pub fn report(dir: &Path, format: Format) -> CmdResult {
    let res: SweepResult = read_json(&dir.join("sweep.json"))?;
    let corners = SweepConfig::default().f_corners;
    let optima = res.optima(&res.cost);
    let by_corner = cost_sensitivity(&res, &res.cost, &corners);
    let census = res.census();
    match format {
        Format::Json => {
            let doc = serde_json::json!({
                "optima": optima,
                "corners": by_corner,
                "census": census,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("plain data serializes")
            );
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let row = |kind: &str, o: &Optimum| {
                [
                    kind.to_string(),
                    format!("{:?}", o.theta_max_deg),
                    format!("{:?}", o.f[0]),
                    format!("{:?}", o.f[1]),
                    format!("{:?}", o.c_s),
                    format!("{:?}", o.c_d),
                    format!("{:?}", o.lcoe),
                    format!("{:?}", o.e_n),
                ]
            };
            let stdout = Path::new("<stdout>");
            w.write_record([
                "kind",
                "theta_max_deg",
                "f_s",
                "f_d",
                "c_s",
                "c_d",
                "lcoe",
                "e_n",
            ])
            .map_err(|e| csv_err(stdout, e))?;
            for o in &optima {
                w.write_record(row("level", o))
                    .map_err(|e| csv_err(stdout, e))?;
            }
            for o in &by_corner {
                w.write_record(row("corner", o))
                    .map_err(|e| csv_err(stdout, e))?;
            }
            w.flush().map_err(|e| Exit::io(stdout, e))?;
        }
        Format::Text => {
            println!("optima per pitch limit");
            for (o, c) in optima.iter().zip(&census) {
                println!(
                    "  {:>4}°  c_s {:>6.2}  c_d {:>6.2}  LCOE {:>8.3}  E_n {:>7.1} h  infeasible pairs {}",
                    o.theta_max_deg, o.c_s, o.c_d, o.lcoe, o.e_n, c.infeasible_pairs
                );
            }
            println!("capital cost corners");
            for o in &by_corner {
                println!(
                    "  F = [{}, {}]  {:>4}°  c_s {:>6.2}  c_d {:>6.2}  LCOE {:>8.3}",
                    o.f[0], o.f[1], o.theta_max_deg, o.c_s, o.c_d, o.lcoe
                );
            }
        }
    }
    Ok(())
}
