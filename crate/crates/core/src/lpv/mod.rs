//! Continuous LPV models built from sampled linearizations.
//!
//! Every nonzero matrix entry and every operating-point component of a
//! sample family is interpolated in the wind speed with a shape-preserving
//! cubic Hermite interpolant. Evaluating the model at `w` gives
//! `(A, B, C, D, g)(w)`, the operating point `(ξ_o, u_o)(w)` and the analytic
//! derivative `∂ξ_o/∂w`, which enters the relative dynamics as a drift:
//!
//! ```text
//! dξΔ/dt = A(w) ξΔ + B(w) uΔ − ∂ξ_o/∂w · dw/dt
//! ```

mod plant;
mod store;
mod validate;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lti::{gemv_acc, rk4, Labels, OperatingPoint, Simulation, StateSpaceModel};
use crate::pchip::PchipTable;
use crate::trajectory::Trajectory;

pub use plant::{build_plant_family, PlantLpvFamily, PlantSlice};
pub use store::{
    load_lpv, FamilyManifest, LpvManifest, MaskRecord, ModelManifest, MANIFEST_FILE, SCHEMA_VERSION,
};
pub use validate::{
    alternate_split, step_wind_scenario, time_domain_comparison, validate, HeldOutError,
    StationarityRecord, TimeDomainRms, ValidationOptions, ValidationReport,
};

/// Entries with magnitude below this are structural zeros.
pub const SPARSITY_THRESHOLD: f64 = 1e-12;
/// Largest distance outside the sampled span at which evaluation is allowed [m/s].
pub const MAX_EXTRAPOLATION: f64 = 2.0;

/// Default sample set: integer wind speeds 3..=25 m/s.
pub fn default_wind_samples() -> Vec<f64> {
    (3..=25).map(f64::from).collect()
}

/// One evaluation of an LPV model.
#[derive(Debug, Clone)]
pub struct LpvPoint {
    pub model: StateSpaceModel,
    pub op: OperatingPoint,
    pub dxi_dw: DVector<f64>,
}

/// Anything that can be evaluated as a function of wind speed.
pub trait LpvSource: Sync {
    fn eval(&self, w: f64) -> Result<LpvPoint>;
    /// Closed span where evaluation is permitted (including extrapolation).
    fn span(&self) -> (f64, f64);
    fn labels(&self) -> &Labels;
    /// Content hash identifying the model data.
    fn fingerprint(&self) -> String;
}

/// Row-major boolean masks of the union sparsity pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Masks {
    pub a: Vec<bool>,
    pub b: Vec<bool>,
    pub c: Vec<bool>,
    pub d: Vec<bool>,
}

fn mask_of(m: &DMatrix<f64>) -> Vec<bool> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)].abs() >= SPARSITY_THRESHOLD);
        }
    }
    out
}

fn union(a: &mut [bool], b: &[bool]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x |= *y;
    }
}

#[derive(Debug, Clone)]
pub struct LpvModel {
    samples: Vec<(StateSpaceModel, OperatingPoint)>,
    w: Vec<f64>,
    masks: Masks,
    sparsity_mismatches: usize,
    table: PchipTable,
    dims: (usize, usize, usize),
    extrapolation: f64,
    fingerprint: String,
}

/// Confirms that every sample has the structure of the first one.
pub(crate) fn check_structure(samples: &[(StateSpaceModel, OperatingPoint)]) -> Result<()> {
    let (m0, op0) = &samples[0];
    for (k, (m, op)) in samples.iter().enumerate() {
        let same = m.state_dim() == m0.state_dim()
            && m.input_dim() == m0.input_dim()
            && m.output_dim() == m0.output_dim()
            && m.labels == m0.labels
            && op.xi_o.len() == m0.state_dim()
            && op.u_o.len() == m0.input_dim();
        if !same {
            return Err(Error::Build(format!(
                "sample {k} (w = {}) does not match the structure of sample 0",
                op.w
            )));
        }
        if op.x_p != op0.x_p {
            return Err(Error::Build(format!(
                "sample {k} (w = {}) has plant {:?}, expected {:?}",
                op.w, op.x_p, op0.x_p
            )));
        }
    }
    Ok(())
}

impl LpvModel {
    /// Fits the interpolants. Samples must share structure and be sorted by
    /// strictly increasing wind speed.
    pub fn build(samples: Vec<(StateSpaceModel, OperatingPoint)>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::Build(format!(
                "need at least 4 samples, got {}",
                samples.len()
            )));
        }
        check_structure(&samples)?;
        let w: Vec<f64> = samples.iter().map(|(_, op)| op.w).collect();
        if let Some(k) = w.windows(2).position(|p| !(p[1] > p[0])) {
            return Err(Error::Build(format!(
                "wind speeds not strictly increasing at sample {}",
                k + 1
            )));
        }
        let (m0, _) = &samples[0];
        let dims = (m0.state_dim(), m0.input_dim(), m0.output_dim());

        let per_sample: Vec<[Vec<bool>; 4]> = samples
            .iter()
            .map(|(m, _)| [mask_of(&m.a), mask_of(&m.b), mask_of(&m.c), mask_of(&m.d)])
            .collect();
        let mut masks = per_sample[0].clone();
        for s in &per_sample[1..] {
            for k in 0..4 {
                union(&mut masks[k], &s[k]);
            }
        }
        let sparsity_mismatches = per_sample
            .iter()
            .map(|s| {
                (0..4)
                    .map(|k| s[k].iter().zip(&masks[k]).filter(|(a, b)| a != b).count())
                    .sum::<usize>()
            })
            .sum();
        let [ma, mb, mc, md] = masks;
        let masks = Masks {
            a: ma,
            b: mb,
            c: mc,
            d: md,
        };

        let mut channels = Vec::new();
        let mats = |m: &StateSpaceModel| [m.a.clone(), m.b.clone(), m.c.clone(), m.d.clone()];
        let all_masks = [&masks.a, &masks.b, &masks.c, &masks.d];
        let stacked: Vec<[DMatrix<f64>; 4]> = samples.iter().map(|(m, _)| mats(m)).collect();
        for (k, mask) in all_masks.iter().enumerate() {
            let ncols = stacked[0][k].ncols();
            for (e, &on) in mask.iter().enumerate() {
                if on {
                    let (i, j) = (e / ncols, e % ncols);
                    channels.push(stacked.iter().map(|s| s[k][(i, j)]).collect());
                }
            }
        }
        for i in 0..dims.2 {
            channels.push(samples.iter().map(|(m, _)| m.g[i]).collect());
        }
        for i in 0..dims.0 {
            channels.push(samples.iter().map(|(_, op)| op.xi_o[i]).collect());
        }
        for i in 0..dims.1 {
            channels.push(samples.iter().map(|(_, op)| op.u_o[i]).collect());
        }
        let table = PchipTable::new(w.clone(), channels)?;
        let fingerprint = store::fingerprint_samples(&samples);
        Ok(Self {
            samples,
            w,
            masks,
            sparsity_mismatches,
            table,
            dims,
            extrapolation: MAX_EXTRAPOLATION,
            fingerprint,
        })
    }

    /// Restricts extrapolation to `margin` m/s (at most the default 2 m/s).
    pub fn with_extrapolation(mut self, margin: f64) -> Self {
        self.extrapolation = margin.clamp(0.0, MAX_EXTRAPOLATION);
        self
    }

    pub fn wind_samples(&self) -> &[f64] {
        &self.w
    }

    pub fn samples(&self) -> &[(StateSpaceModel, OperatingPoint)] {
        &self.samples
    }

    pub fn masks(&self) -> &Masks {
        &self.masks
    }

    /// Sample entries that were zero where another sample was not.
    pub fn sparsity_mismatches(&self) -> usize {
        self.sparsity_mismatches
    }

    pub fn plant(&self) -> [f64; 2] {
        self.samples[0].1.x_p
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    fn check_span(&self, w: f64) -> Result<bool> {
        let (lo, hi) = (self.w[0], self.w[self.w.len() - 1]);
        if !w.is_finite() || w < lo - self.extrapolation || w > hi + self.extrapolation {
            return Err(Error::Extrapolation {
                wind: w,
                lo: lo - self.extrapolation,
                hi: hi + self.extrapolation,
            });
        }
        Ok(w < lo || w > hi)
    }

    /// Raw channel values and derivatives at `w`.
    pub(crate) fn channels_at(&self, w: f64) -> Result<(Vec<f64>, Vec<f64>, bool)> {
        let extrapolated = self.check_span(w)?;
        let mut v = vec![0.0; self.table.channels()];
        let mut d = vec![0.0; self.table.channels()];
        self.table.eval_into(w, &mut v, Some(&mut d));
        Ok((v, d, extrapolated))
    }

    pub(crate) fn assemble(&self, w: f64, v: &[f64], d: &[f64], extrapolated: bool) -> LpvPoint {
        let (n, m, p) = self.dims;
        let mut it = v.iter().copied();
        let mut fill = |rows: usize, cols: usize, mask: &[bool]| {
            let mut out = DMatrix::zeros(rows, cols);
            for (e, &on) in mask.iter().enumerate() {
                if on {
                    out[(e / cols, e % cols)] = it.next().expect("channel count");
                }
            }
            out
        };
        let a = fill(n, n, &self.masks.a);
        let b = fill(n, m, &self.masks.b);
        let c = fill(p, n, &self.masks.c);
        let dd = fill(p, m, &self.masks.d);
        let off = v.len() - (p + n + m);
        let g = DVector::from_row_slice(&v[off..off + p]);
        let xi = DVector::from_row_slice(&v[off + p..off + p + n]);
        let u = DVector::from_row_slice(&v[off + p + n..]);
        let dxi = DVector::from_row_slice(&d[off + p..off + p + n]);
        let labels = self.samples[0].0.labels.clone();
        let model = StateSpaceModel {
            a,
            b,
            c,
            d: dd,
            g,
            labels,
        };
        let mut op = OperatingPoint::new(w, xi, u, self.plant());
        op.extrapolated = extrapolated;
        LpvPoint {
            model,
            op,
            dxi_dw: dxi,
        }
    }

    pub fn eval(&self, w: f64) -> Result<LpvPoint> {
        let (v, d, ex) = self.channels_at(w)?;
        let point = self.assemble(w, &v, &d, ex);
        if point
            .model
            .a
            .iter()
            .chain(point.op.xi_o.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite(format!("LPV evaluation at w = {w}")));
        }
        Ok(point)
    }
}

impl LpvSource for LpvModel {
    fn eval(&self, w: f64) -> Result<LpvPoint> {
        LpvModel::eval(self, w)
    }

    fn span(&self) -> (f64, f64) {
        (
            self.w[0] - self.extrapolation,
            self.w[self.w.len() - 1] + self.extrapolation,
        )
    }

    fn labels(&self) -> &Labels {
        &self.samples[0].0.labels
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}

/// Simulates the LPV relative dynamics with the wind-rate drift term.
/// Absolute states are `ξΔ + ξ_o(w(t))`.
pub fn simulate_lpv(
    lpv: &dyn LpvSource,
    wind: &Trajectory,
    u_delta: &Trajectory,
    xi_delta0: &[f64],
    grid: &[f64],
) -> Result<Simulation> {
    let labels = lpv.labels().clone();
    let (n, m) = (labels.states.len(), labels.inputs.len());
    if xi_delta0.len() != n || u_delta.width() != m || wind.width() != 1 {
        return Err(Error::Dimension(format!(
            "expected {n} initial states, {m} input channels and one wind channel"
        )));
    }
    let dwdt = wind.derivative();
    let mut u = vec![0.0; m];
    let (mut ws, mut dws) = ([0.0], [0.0]);
    let rows = rk4(grid, xi_delta0, |t, x, dx| {
        wind.sample_into(t, &mut ws);
        dwdt.sample_into(t, &mut dws);
        let pt = lpv.eval(ws[0])?;
        u_delta.sample_into(t, &mut u);
        dx.fill(0.0);
        gemv_acc(&pt.model.a, x, dx);
        gemv_acc(&pt.model.b, &u, dx);
        if dws[0] != 0.0 {
            for i in 0..n {
                dx[i] -= pt.dxi_dw[i] * dws[0];
            }
        }
        Ok(())
    })?;
    let relative = Trajectory::new(grid.to_vec(), rows, labels.states.clone())?;
    let mut offsets = Vec::with_capacity(grid.len());
    for &t in grid {
        wind.sample_into(t, &mut ws);
        offsets.push(lpv.eval(ws[0])?.op.xi_o);
    }
    let mut k = 0;
    let absolute = relative.offset_by(|_| {
        let o: Vec<f64> = offsets[k].iter().copied().collect();
        k += 1;
        o
    });
    Ok(Simulation { relative, absolute })
}
