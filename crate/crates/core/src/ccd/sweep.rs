//! The plant-design × pitch-limit sweep.
//!
//! Every `(level, cell, case)` triple is an independent subproblem. Triples
//! run on a rayon pool; results are collected in a fixed order so output
//! files do not depend on scheduling. Each solve can be cached on disk under
//! a content hash of everything that determines it, which makes an
//! interrupted sweep resumable.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cost::{aep, CostModel, Weibull};
use super::wind::{generate_wind_cases, WindCase, WindConfig};
use crate::dtqp::{average_power, solve_ocp, OcProblem, OcSettings};
use crate::error::{Error, Result};
use crate::io::write_json;
use crate::lpv::{
    build_plant_family, default_wind_samples, load_lpv, LpvManifest, LpvSource, PlantLpvFamily,
};
use crate::qp::{QpOptions, QpStatus};
use crate::surrogate::{PlantDesign, Surrogate, PLANT_LOWER, PLANT_UPPER};
use crate::trajectory::linspace;

const CACHE_VERSION: &str = "fowt-ccd solve cache v1";

/// `count` equidistant values on `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.lower, self.upper, self.count)
    }

    fn validate(&self, name: &str, bounds: (f64, f64)) -> Result<()> {
        let ok = self.count >= 1
            && self.lower <= self.upper
            && (self.count > 1 || self.lower == self.upper)
            && self.lower >= bounds.0
            && self.upper <= bounds.1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "axis {name} {self:?} must lie within [{}, {}]",
                bounds.0, bounds.1
            )))
        }
    }
}

/// Grid of the plant-family nodes built from the surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyGrid {
    pub c_s: usize,
    pub c_d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub c_s: Axis,
    pub c_d: Axis,
    /// Platform pitch limits [deg].
    pub theta_levels_deg: Vec<f64>,
    /// Subproblem settings; the pitch limit is replaced per level.
    pub oc: OcSettings,
    pub wind: WindConfig,
    pub weibull: Weibull,
    pub cost: CostModel,
    /// Capital cost factors for the sensitivity study.
    pub f_corners: Vec<[f64; 2]>,
    /// Stored plant family to use instead of building one.
    pub lpv: Option<PathBuf>,
    /// Node counts when the family is built from the reference surrogate.
    pub family: FamilyGrid,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            c_s: Axis {
                lower: PLANT_LOWER[0],
                upper: PLANT_UPPER[0],
                count: 60,
            },
            c_d: Axis {
                lower: PLANT_LOWER[1],
                upper: PLANT_UPPER[1],
                count: 60,
            },
            theta_levels_deg: vec![3.0, 4.0, 5.0, 6.0, 7.0],
            oc: OcSettings::default(),
            wind: WindConfig::default(),
            weibull: Weibull::default(),
            cost: CostModel::default(),
            f_corners: vec![[0.8, 0.8], [1.2, 0.8], [0.8, 1.2], [1.2, 1.2]],
            lpv: None,
            family: FamilyGrid { c_s: 7, c_d: 7 },
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.c_s.validate("c_s", (PLANT_LOWER[0], PLANT_UPPER[0]))?;
        self.c_d.validate("c_d", (PLANT_LOWER[1], PLANT_UPPER[1]))?;
        if self.theta_levels_deg.is_empty()
            || self
                .theta_levels_deg
                .iter()
                .any(|t| !(*t > 0.0 && *t < 90.0))
        {
            return Err(Error::InvalidInput(
                "pitch levels must be in (0, 90) degrees".into(),
            ));
        }
        self.oc.validate()?;
        self.wind.validate()?;
        if self.oc.t_f > self.wind.t_f {
            return Err(Error::InvalidInput(format!(
                "horizon {} s exceeds wind profiles of {} s",
                self.oc.t_f, self.wind.t_f
            )));
        }
        if self.family.c_s < 2 || self.family.c_d < 2 {
            return Err(Error::InvalidInput(
                "plant family needs at least 2 nodes per axis".into(),
            ));
        }
        if !(self.weibull.k > 0.0 && self.weibull.lambda > 0.0) {
            return Err(Error::InvalidInput(
                "Weibull parameters must be positive".into(),
            ));
        }
        self.cost.validate()
    }

    /// Loads the configured plant family, or builds one from the reference
    /// surrogate over the plant box.
    pub fn plant_family(&self) -> Result<PlantLpvFamily> {
        match &self.lpv {
            Some(dir) => match load_lpv(dir)? {
                LpvManifest::Family(f) => Ok(f),
                LpvManifest::Model(_) => Err(Error::InvalidInput(format!(
                    "{} holds a single LPV model, the sweep needs a plant family",
                    dir.display()
                ))),
            },
            None => build_plant_family(
                &Surrogate::reference(),
                &linspace(PLANT_LOWER[0], PLANT_UPPER[0], self.family.c_s),
                &linspace(PLANT_LOWER[1], PLANT_UPPER[1], self.family.c_d),
                &default_wind_samples(),
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Worker threads; all cores when `None`.
    pub workers: Option<usize>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Optimal,
    Infeasible,
    MaxIter,
    /// The subproblem could not be set up (e.g. wind outside the model span).
    Failed,
}

impl From<QpStatus> for CaseStatus {
    fn from(s: QpStatus) -> Self {
        match s {
            QpStatus::Optimal => Self::Optimal,
            QpStatus::Infeasible => Self::Infeasible,
            QpStatus::MaxIter => Self::MaxIter,
        }
    }
}

/// Outcome of one subproblem, as cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: CaseStatus,
    /// Average power [W] when optimal.
    pub p_bar: Option<f64>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub level: usize,
    pub i: usize,
    pub j: usize,
    /// Index into the case list.
    pub case: usize,
    #[serde(flatten)]
    pub outcome: SolveOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub level: usize,
    pub i: usize,
    pub j: usize,
    pub c_s: f64,
    pub c_d: f64,
    /// [h]
    pub e_n: f64,
    /// [$/MW/yr]
    pub c_n: f64,
    /// [$/MWh], infinite when `e_n` is zero.
    pub lcoe: f64,
    /// Cases without an optimal solution.
    pub n_infeasible: usize,
}

/// Everything a sweep produced. Pure data: LCOE maps can be recomputed from
/// it for any cost model without solving again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub c_s: Vec<f64>,
    pub c_d: Vec<f64>,
    pub theta_levels_deg: Vec<f64>,
    pub case_ids: Vec<usize>,
    pub case_means: Vec<f64>,
    /// AEP quadrature weights per case.
    pub case_weights: Vec<f64>,
    pub f_wl: f64,
    pub cost: CostModel,
    pub family_fingerprint: String,
    /// Ordered by level, then `c_s`, `c_d` and case.
    pub solves: Vec<SolveRecord>,
    /// Ordered by level, then `c_s` and `c_d`.
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub solves: usize,
    pub cache_hits: usize,
    pub workers: usize,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub theta_max_deg: f64,
    pub f: [f64; 2],
    pub c_s: f64,
    pub c_d: f64,
    pub lcoe: f64,
    pub e_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub theta_max_deg: f64,
    /// `(cell, case)` pairs without an optimal solution.
    pub infeasible_pairs: usize,
    /// Cells with at least one such case.
    pub cells_with_infeasible: usize,
    /// Cells where no case produced energy.
    pub zero_energy_cells: usize,
}

impl SweepResult {
    fn cell_index(&self, level: usize, i: usize, j: usize) -> usize {
        (level * self.c_s.len() + i) * self.c_d.len() + j
    }

    pub fn cell(&self, level: usize, i: usize, j: usize) -> &CellResult {
        &self.cells[self.cell_index(level, i, j)]
    }

    pub fn solve(&self, level: usize, i: usize, j: usize, case: usize) -> &SolveRecord {
        &self.solves[self.cell_index(level, i, j) * self.case_ids.len() + case]
    }

    /// LCOE for every cell under `cost`, in cell order.
    pub fn lcoe_map(&self, cost: &CostModel) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| {
                cost.lcoe(
                    &PlantDesign {
                        c_s: c.c_s,
                        c_d: c.c_d,
                    },
                    c.e_n,
                )
            })
            .collect()
    }

    /// Whether every case of each cell at `level` is optimal, `c_s`-major.
    pub fn feasibility_mask(&self, level: usize) -> Vec<bool> {
        let n = self.c_s.len() * self.c_d.len();
        self.cells[level * n..(level + 1) * n]
            .iter()
            .map(|c| c.n_infeasible == 0)
            .collect()
    }

    /// Lowest-LCOE cell per level under `cost`; ties go to the first cell.
    pub fn optima(&self, cost: &CostModel) -> Vec<Optimum> {
        let map = self.lcoe_map(cost);
        let n = self.c_s.len() * self.c_d.len();
        self.theta_levels_deg
            .iter()
            .enumerate()
            .map(|(l, &deg)| {
                let (k, lcoe) = map[l * n..(l + 1) * n].iter().enumerate().fold(
                    (0, f64::INFINITY),
                    |best, (k, &v)| if v < best.1 { (k, v) } else { best },
                );
                let c = &self.cells[l * n + k];
                Optimum {
                    theta_max_deg: deg,
                    f: cost.f,
                    c_s: c.c_s,
                    c_d: c.c_d,
                    lcoe,
                    e_n: c.e_n,
                }
            })
            .collect()
    }

    pub fn census(&self) -> Vec<Census> {
        let n = self.c_s.len() * self.c_d.len();
        self.theta_levels_deg
            .iter()
            .enumerate()
            .map(|(l, &deg)| {
                let cells = &self.cells[l * n..(l + 1) * n];
                Census {
                    theta_max_deg: deg,
                    infeasible_pairs: cells.iter().map(|c| c.n_infeasible).sum(),
                    cells_with_infeasible: cells.iter().filter(|c| c.n_infeasible > 0).count(),
                    zero_energy_cells: cells.iter().filter(|c| c.e_n <= 0.0).count(),
                }
            })
            .collect()
    }

    pub fn write_outputs(
        &self,
        dir: &Path,
        stats: &SweepStats,
        corners: &[[f64; 2]],
    ) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut w = csv_writer(&dir.join("sweep.csv"))?;
        w.write_record([
            "c_s",
            "c_d",
            "theta_max_deg",
            "E_n",
            "C_n",
            "LCOE",
            "n_infeasible",
        ])?;
        for c in &self.cells {
            w.write_record([
                fmt(c.c_s),
                fmt(c.c_d),
                fmt(self.theta_levels_deg[c.level]),
                fmt(c.e_n),
                fmt(c.c_n),
                fmt(c.lcoe),
                c.n_infeasible.to_string(),
            ])?;
        }
        flush(w, &dir.join("sweep.csv"))?;

        let mut w = csv_writer(&dir.join("cases.csv"))?;
        w.write_record([
            "c_s",
            "c_d",
            "theta_max_deg",
            "case",
            "mean_wind",
            "P_bar",
            "status",
            "iterations",
        ])?;
        for s in &self.solves {
            w.write_record([
                fmt(self.c_s[s.i]),
                fmt(self.c_d[s.j]),
                fmt(self.theta_levels_deg[s.level]),
                self.case_ids[s.case].to_string(),
                fmt(self.case_means[s.case]),
                s.outcome.p_bar.map(fmt).unwrap_or_default(),
                status_name(s.outcome.status).to_string(),
                s.outcome.iterations.to_string(),
            ])?;
        }
        flush(w, &dir.join("cases.csv"))?;

        for (name, pick) in [
            (
                "heatmap_lcoe.csv",
                (|c: &CellResult| c.lcoe) as fn(&CellResult) -> f64,
            ),
            ("heatmap_aep.csv", |c: &CellResult| c.e_n),
        ] {
            let path = dir.join(name);
            let mut w = csv_writer(&path)?;
            w.write_record(["theta_max_deg", "c_s", "c_d", "value"])?;
            for c in &self.cells {
                w.write_record([
                    fmt(self.theta_levels_deg[c.level]),
                    fmt(c.c_s),
                    fmt(c.c_d),
                    fmt(pick(c)),
                ])?;
            }
            flush(w, &path)?;
        }
        let path = dir.join("heatmap_power.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["theta_max_deg", "case", "c_s", "c_d", "P_bar"])?;
        for s in &self.solves {
            w.write_record([
                fmt(self.theta_levels_deg[s.level]),
                self.case_ids[s.case].to_string(),
                fmt(self.c_s[s.i]),
                fmt(self.c_d[s.j]),
                fmt(s.outcome.p_bar.unwrap_or(0.0)),
            ])?;
        }
        flush(w, &path)?;

        write_json(&dir.join("sweep.json"), self)?;
        let summary = SweepSummary {
            optima: self.optima(&self.cost),
            corners: cost_sensitivity(self, &self.cost, corners),
            census: self.census(),
            stats: *stats,
        };
        write_json(&dir.join("summary.json"), &summary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub optima: Vec<Optimum>,
    pub corners: Vec<Optimum>,
    pub census: Vec<Census>,
    pub stats: SweepStats,
}

fn status_name(s: CaseStatus) -> &'static str {
    match s {
        CaseStatus::Optimal => "optimal",
        CaseStatus::Infeasible => "infeasible",
        CaseStatus::MaxIter => "max_iter",
        CaseStatus::Failed => "failed",
    }
}

/// Shortest representation that round-trips.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn flush(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Optimal LCOE and design per level for each capital cost factor, reusing
/// the AEP already in `result`.
pub fn cost_sensitivity(
    result: &SweepResult,
    cost: &CostModel,
    corners: &[[f64; 2]],
) -> Vec<Optimum> {
    corners
        .iter()
        .flat_map(|&f| result.optima(&cost.with_f(f)))
        .collect()
}

/// Assembles cells from solve records.
fn aggregate(
    c_s: &[f64],
    c_d: &[f64],
    levels: usize,
    weights: &[f64],
    cost: &CostModel,
    solves: &[SolveRecord],
) -> Result<Vec<CellResult>> {
    let nc = weights.len();
    let mut cells = Vec::with_capacity(levels * c_s.len() * c_d.len());
    for (k, chunk) in solves.chunks(nc).enumerate() {
        let (level, i, j) = (chunk[0].level, chunk[0].i, chunk[0].j);
        debug_assert_eq!(k, (level * c_s.len() + i) * c_d.len() + j);
        let powers: Vec<Option<f64>> = chunk.iter().map(|s| s.outcome.p_bar).collect();
        let e_n = aep(&powers, weights, cost.f_wl)?;
        let x_p = PlantDesign {
            c_s: c_s[i],
            c_d: c_d[j],
        };
        cells.push(CellResult {
            level,
            i,
            j,
            c_s: x_p.c_s,
            c_d: x_p.c_d,
            e_n,
            c_n: cost.c_n(&x_p),
            lcoe: cost.lcoe(&x_p, e_n),
            n_infeasible: powers.iter().filter(|p| p.is_none()).count(),
        });
    }
    Ok(cells)
}

/// Solves one subproblem; setup errors become a `Failed` outcome.
pub fn solve_case(
    source: &dyn LpvSource,
    case: &WindCase,
    settings: OcSettings,
    opts: &QpOptions,
) -> SolveOutcome {
    let p = OcProblem {
        source,
        wind: &case.profile,
        settings,
    };
    match solve_ocp(&p, opts) {
        Ok(sol) => {
            let p_bar = average_power(&sol).ok();
            SolveOutcome {
                status: sol.status.into(),
                p_bar,
                objective: p_bar.map(|_| sol.objective),
                iterations: sol.iterations,
                message: None,
            }
        }
        Err(e) => SolveOutcome {
            status: CaseStatus::Failed,
            p_bar: None,
            objective: None,
            iterations: 0,
            message: Some(e.to_string()),
        },
    }
}

fn cache_key(
    source: &dyn LpvSource,
    case: &WindCase,
    settings: &OcSettings,
    opts: &QpOptions,
) -> String {
    let mut h = Sha256::new();
    h.update(CACHE_VERSION.as_bytes());
    h.update(source.fingerprint().as_bytes());
    h.update(serde_json::to_vec(&case.profile).expect("trajectories serialize"));
    h.update(serde_json::to_vec(settings).expect("settings serialize"));
    h.update(format!("{opts:?}").as_bytes());
    hex::encode(h.finalize())
}

fn cache_read(dir: &Path, key: &str) -> Option<SolveOutcome> {
    let text = std::fs::read_to_string(dir.join(format!("{key}.json"))).ok()?;
    serde_json::from_str(&text).ok()
}

fn cache_write(dir: &Path, key: &str, outcome: &SolveOutcome) -> Result<()> {
    let path = dir.join(format!("{key}.json"));
    let tmp = dir.join(format!("{key}.json.tmp{}", std::process::id()));
    let text = serde_json::to_string(outcome).map_err(|e| Error::json(&path, e))?;
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

/// Runs the sweep over `family`.
pub fn run_sweep(
    cfg: &SweepConfig,
    family: &PlantLpvFamily,
    opts: &SweepOptions,
) -> Result<(SweepResult, SweepStats)> {
    cfg.validate()?;
    let start = Instant::now();
    let c_s = cfg.c_s.values();
    let c_d = cfg.c_d.values();
    for (a, b) in [(c_s[0], c_d[0]), (c_s[c_s.len() - 1], c_d[c_d.len() - 1])] {
        family.slice(PlantDesign { c_s: a, c_d: b })?;
    }
    let cases = generate_wind_cases(&cfg.wind)?;
    let means: Vec<f64> = cases.iter().map(|c| c.mean).collect();
    let weights = cfg.weibull.weights(&means);
    if let Some(dir) = &opts.cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let levels = cfg.theta_levels_deg.len();
    let jobs: Vec<(usize, usize, usize, usize)> = (0..levels)
        .flat_map(|l| {
            let (ncs, ncd, nc) = (c_s.len(), c_d.len(), cases.len());
            (0..ncs)
                .flat_map(move |i| (0..ncd).flat_map(move |j| (0..nc).map(move |k| (l, i, j, k))))
        })
        .collect();
    let qp_opts = QpOptions::default();
    let run = |&(l, i, j, k): &(usize, usize, usize, usize)| -> (SolveRecord, bool) {
        let mut settings = cfg.oc;
        settings.limits = settings.limits.with_theta_deg(cfg.theta_levels_deg[l]);
        let slice = family
            .slice(PlantDesign {
                c_s: c_s[i],
                c_d: c_d[j],
            })
            .expect("grid checked against the family hull");
        let key = opts
            .cache_dir
            .as_ref()
            .map(|_| cache_key(&slice, &cases[k], &settings, &qp_opts));
        let cached = match (&opts.cache_dir, &key) {
            (Some(dir), Some(key)) => cache_read(dir, key),
            _ => None,
        };
        let hit = cached.is_some();
        let outcome = cached.unwrap_or_else(|| {
            let out = solve_case(&slice, &cases[k], settings, &qp_opts);
            if let (Some(dir), Some(key)) = (&opts.cache_dir, &key) {
                // A failed cache write only costs a recomputation later.
                let _ = cache_write(dir, key, &out);
            }
            out
        });
        (
            SolveRecord {
                level: l,
                i,
                j,
                case: k,
                outcome,
            },
            hit,
        )
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    let workers = pool.current_num_threads();
    let records: Vec<(SolveRecord, bool)> = pool.install(|| jobs.par_iter().map(run).collect());
    let cache_hits = records.iter().filter(|r| r.1).count();
    let solves: Vec<SolveRecord> = records.into_iter().map(|r| r.0).collect();
    let cells = aggregate(&c_s, &c_d, levels, &weights, &cfg.cost, &solves)?;
    let result = SweepResult {
        c_s,
        c_d,
        theta_levels_deg: cfg.theta_levels_deg.clone(),
        case_ids: cases.iter().map(|c| c.id).collect(),
        case_means: means,
        case_weights: weights,
        f_wl: cfg.cost.f_wl,
        cost: cfg.cost,
        family_fingerprint: family.fingerprint().to_string(),
        solves,
        cells,
    };
    let stats = SweepStats {
        solves: jobs.len(),
        cache_hits,
        workers,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    Ok((result, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn family() -> &'static PlantLpvFamily {
        static FAMILY: OnceLock<PlantLpvFamily> = OnceLock::new();
        FAMILY.get_or_init(|| {
            build_plant_family(
                &Surrogate::reference(),
                &[36.0, 78.0],
                &[6.0, 24.0],
                &default_wind_samples(),
            )
            .unwrap()
        })
    }

    fn smoke_config() -> SweepConfig {
        let mut cfg = SweepConfig {
            c_s: Axis {
                lower: 40.0,
                upper: 70.0,
                count: 2,
            },
            c_d: Axis {
                lower: 10.0,
                upper: 20.0,
                count: 2,
            },
            theta_levels_deg: vec![6.0],
            ..SweepConfig::default()
        };
        cfg.wind.means = vec![9.0, 14.0];
        cfg.wind.t_f = 60.0;
        cfg.oc.t_f = 60.0;
        cfg.oc.mesh = 61;
        cfg
    }

    #[test]
    fn smoke_sweep_solves_every_triple() {
        let (res, stats) = run_sweep(&smoke_config(), family(), &SweepOptions::default()).unwrap();
        assert_eq!(stats.solves, 8);
        assert_eq!(res.solves.len(), 8);
        assert_eq!(res.cells.len(), 4);
        for (k, s) in res.solves.iter().enumerate() {
            assert_eq!(k, (s.i * 2 + s.j) * 2 + s.case);
        }
        for c in &res.cells {
            assert!(c.e_n > 0.0);
            assert_eq!(c.lcoe, c.c_n / c.e_n);
        }
    }

    #[test]
    fn cached_rerun_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let opts = SweepOptions {
            workers: Some(2),
            cache_dir: Some(dir.path().to_path_buf()),
        };
        let cfg = smoke_config();
        let (a, s1) = run_sweep(&cfg, family(), &opts).unwrap();
        // Simulate an interrupted run by dropping part of the cache.
        let mut files: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        std::fs::remove_file(&files[0]).unwrap();
        let (b, s2) = run_sweep(&cfg, family(), &opts).unwrap();
        assert_eq!((s1.cache_hits, s2.cache_hits), (0, 7));
        assert_eq!(a, b);
        let (c, _) = run_sweep(&cfg, family(), &SweepOptions::default()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn lcoe_maps_recompute_exactly() {
        let (res, _) = run_sweep(&smoke_config(), family(), &SweepOptions::default()).unwrap();
        let stored: Vec<f64> = res.cells.iter().map(|c| c.lcoe).collect();
        assert_eq!(res.lcoe_map(&res.cost), stored);
        let json = serde_json::to_string(&res).unwrap();
        let back: SweepResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.lcoe_map(&back.cost), stored);
    }

    #[test]
    fn uniform_cost_factors_order_the_optima() {
        let (res, _) = run_sweep(&smoke_config(), family(), &SweepOptions::default()).unwrap();
        let opt = cost_sensitivity(&res, &res.cost, &[[0.8, 0.8], [1.0, 1.0], [1.2, 1.2]]);
        assert!(opt[0].lcoe <= opt[1].lcoe && opt[1].lcoe <= opt[2].lcoe);
    }

    #[test]
    fn setup_failures_are_recorded() {
        let mut cfg = smoke_config();
        cfg.wind.means = vec![25.0];
        cfg.wind.clip = [0.0, 40.0];
        cfg.wind.ramp_periods = [20.0, 400.0];
        cfg.wind.ramp_amplitudes = [0.2, 0.0];
        let (res, _) = run_sweep(&cfg, family(), &SweepOptions::default()).unwrap();
        assert!(res
            .solves
            .iter()
            .all(|s| s.outcome.status == CaseStatus::Failed));
        assert!(res.solves[0].outcome.message.is_some());
        assert!(res
            .cells
            .iter()
            .all(|c| c.e_n == 0.0 && c.lcoe == f64::INFINITY));
        assert_eq!(res.census()[0].zero_energy_cells, 4);
    }

    #[test]
    fn writes_all_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = smoke_config();
        let (res, stats) = run_sweep(&cfg, family(), &SweepOptions::default()).unwrap();
        res.write_outputs(dir.path(), &stats, &cfg.f_corners)
            .unwrap();
        for f in [
            "sweep.csv",
            "cases.csv",
            "summary.json",
            "sweep.json",
            "heatmap_lcoe.csv",
            "heatmap_aep.csv",
            "heatmap_power.csv",
        ] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(text.lines().count(), 5);
        let summary: SweepSummary = crate::io::read_json(&dir.path().join("summary.json")).unwrap();
        assert_eq!(summary.corners.len(), 4);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_axes() {
        assert!(serde_json::from_str::<SweepConfig>(r#"{"grid": 3}"#).is_err());
        let cfg: SweepConfig = serde_json::from_str(r#"{"oc": {"mesh": 100}}"#).unwrap();
        assert_eq!(cfg.oc.mesh, 100);
        let mut bad = SweepConfig::default();
        bad.c_s.upper = 90.0;
        assert!(bad.validate().is_err());
    }
}
