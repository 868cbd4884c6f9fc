//! Linear time-invariant state-space models.
//!
//! A [`StateSpaceModel`] is the quadruple `(A, B, C, D)` plus the output
//! offset `g`, describing relative dynamics about an [`OperatingPoint`]:
//!
//! ```text
//! dξΔ/dt = A ξΔ + B uΔ
//!      y = g + C ξΔ + D uΔ
//! ```
//!
//! This module also provides the frequency-domain tools used to score model
//! fidelity (transfer matrices, sampled H∞ error) and a fixed-step RK4
//! integrator shared by every simulator in the crate.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub type CMatrix = DMatrix<Complex<f64>>;

/// Default RK4 step for all time-domain simulation [s].
pub const DEFAULT_STEP: f64 = 0.025;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Labels {
    /// Generic `x0.., u0.., y0..` names.
    pub fn numbered(n: usize, m: usize, p: usize) -> Self {
        Self {
            states: (0..n).map(|i| format!("x{i}")).collect(),
            inputs: (0..m).map(|i| format!("u{i}")).collect(),
            outputs: (0..p).map(|i| format!("y{i}")).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub g: DVector<f64>,
    pub labels: Labels,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        g: DVector<f64>,
        labels: Labels,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        let p = c.nrows();
        if a.ncols() != n
            || b.nrows() != n
            || c.ncols() != n
            || d.nrows() != p
            || d.ncols() != m
            || g.len() != p
        {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}, g {}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols(),
                g.len()
            )));
        }
        if labels.states.len() != n || labels.inputs.len() != m || labels.outputs.len() != p {
            return Err(Error::Dimension(
                "label lists do not match (n, m, p)".into(),
            ));
        }
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("matrix {name}")));
            }
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("output offset g".into()));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            g,
            labels,
        })
    }

    /// Model with generic labels and zero output offset.
    pub fn from_abcd(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let labels = Labels::numbered(a.nrows(), b.ncols(), c.nrows());
        let g = DVector::zeros(c.nrows());
        Self::new(a, b, c, d, g, labels)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn output_index(&self, label: &str) -> Option<usize> {
        self.labels.outputs.iter().position(|l| l == label)
    }

    pub fn input_index(&self, label: &str) -> Option<usize> {
        self.labels.inputs.iter().position(|l| l == label)
    }

    /// Keeps only the selected outputs (rows of C, D, g) and inputs (columns of B, D).
    pub fn subsystem(&self, outputs: &[usize], inputs: &[usize]) -> Result<Self> {
        let p = self.output_dim();
        let m = self.input_dim();
        if outputs.iter().any(|&i| i >= p) || inputs.iter().any(|&j| j >= m) {
            return Err(Error::Dimension("subsystem index out of range".into()));
        }
        let b = self.b.select_columns(inputs.iter());
        let c = self.c.select_rows(outputs.iter());
        let d = self
            .d
            .select_rows(outputs.iter())
            .select_columns(inputs.iter());
        let g = DVector::from_iterator(outputs.len(), outputs.iter().map(|&i| self.g[i]));
        let labels = Labels {
            states: self.labels.states.clone(),
            inputs: inputs
                .iter()
                .map(|&j| self.labels.inputs[j].clone())
                .collect(),
            outputs: outputs
                .iter()
                .map(|&i| self.labels.outputs[i].clone())
                .collect(),
        };
        Self::new(self.a.clone(), b, c, d, g, labels)
    }

    /// Subsystem picked by output and input labels.
    pub fn subsystem_by_label(&self, outputs: &[&str], inputs: &[&str]) -> Result<Self> {
        let find = |names: &[String], l: &str| {
            names
                .iter()
                .position(|n| n == l)
                .ok_or_else(|| Error::InvalidInput(format!("no channel labelled {l}")))
        };
        let oi = outputs
            .iter()
            .map(|l| find(&self.labels.outputs, l))
            .collect::<Result<Vec<_>>>()?;
        let ii = inputs
            .iter()
            .map(|l| find(&self.labels.inputs, l))
            .collect::<Result<Vec<_>>>()?;
        self.subsystem(&oi, &ii)
    }

    fn same_io(&self, other: &Self) -> bool {
        self.output_dim() == other.output_dim() && self.input_dim() == other.input_dim()
    }
}

/// Stationary point `(ξ_o, u_o)` at wind speed `w` for plant `x_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub w: f64,
    pub xi_o: DVector<f64>,
    pub u_o: DVector<f64>,
    pub x_p: [f64; 2],
    /// Set when the point was obtained outside the sampled wind span.
    pub extrapolated: bool,
}

impl OperatingPoint {
    pub fn new(w: f64, xi_o: DVector<f64>, u_o: DVector<f64>, x_p: [f64; 2]) -> Self {
        Self {
            w,
            xi_o,
            u_o,
            x_p,
            extrapolated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsRecord {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// JSON interchange document for one linearization: a model plus its
/// operating point. Matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRecord {
    pub w: f64,
    pub x_p: Vec<f64>,
    pub xi_o: Vec<f64>,
    pub u_o: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    pub g: Vec<f64>,
    pub labels: LabelsRecord,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn from_rows(rows: &[Vec<f64>], ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("matrix {name} is ragged")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl ModelRecord {
    pub fn from_parts(model: &StateSpaceModel, op: &OperatingPoint) -> Self {
        Self {
            w: op.w,
            x_p: op.x_p.to_vec(),
            xi_o: op.xi_o.iter().copied().collect(),
            u_o: op.u_o.iter().copied().collect(),
            a: to_rows(&model.a),
            b: to_rows(&model.b),
            c: to_rows(&model.c),
            d: to_rows(&model.d),
            g: model.g.iter().copied().collect(),
            labels: LabelsRecord {
                states: model.labels.states.clone(),
                inputs: model.labels.inputs.clone(),
                outputs: model.labels.outputs.clone(),
            },
        }
    }

    pub fn into_parts(self) -> Result<(StateSpaceModel, OperatingPoint)> {
        let n = self.xi_o.len();
        let m = self.u_o.len();
        let a = from_rows(&self.a, n, "A")?;
        let b = from_rows(&self.b, m, "B")?;
        let c = from_rows(&self.c, n, "C")?;
        let d = from_rows(&self.d, m, "D")?;
        let labels = Labels {
            states: self.labels.states,
            inputs: self.labels.inputs,
            outputs: self.labels.outputs,
        };
        let model = StateSpaceModel::new(a, b, c, d, DVector::from_vec(self.g), labels)?;
        if self.x_p.len() != 2 {
            return Err(Error::Dimension("x_p must have two entries".into()));
        }
        let op = OperatingPoint::new(
            self.w,
            DVector::from_vec(self.xi_o),
            DVector::from_vec(self.u_o),
            [self.x_p[0], self.x_p[1]],
        );
        Ok((model, op))
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

/// Relative and absolute views of one simulation run.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub relative: Trajectory,
    pub absolute: Trajectory,
}

/// Classical fixed-step RK4 over `grid`. `f(t, x, dx)` writes the state
/// derivative. Returns one state row per grid point.
pub fn rk4<F>(grid: &[f64], x0: &[f64], mut f: F) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if grid.is_empty() {
        return Err(Error::InvalidInput("simulation grid is empty".into()));
    }
    let n = x0.len();
    let mut out = Vec::with_capacity(grid.len());
    let mut x = x0.to_vec();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { time: grid[0] });
    }
    out.push(x.clone());
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        f(t, &x, &mut k1)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        f(t + h, &tmp, &mut k4)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: w[1] });
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// `y += M x` for a dense matrix.
pub(crate) fn gemv_acc(m: &DMatrix<f64>, x: &[f64], y: &mut [f64]) {
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj != 0.0 {
            for i in 0..m.nrows() {
                y[i] += m[(i, j)] * xj;
            }
        }
    }
}

/// Simulates the relative dynamics of `model` from `xi_delta0` under the
/// piecewise-linear relative input `u_delta`, on `grid` with RK4.
pub fn simulate_lti(
    model: &StateSpaceModel,
    op: &OperatingPoint,
    u_delta: &Trajectory,
    xi_delta0: &[f64],
    grid: &[f64],
) -> Result<Simulation> {
    let n = model.state_dim();
    if xi_delta0.len() != n {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, model has {n}",
            xi_delta0.len()
        )));
    }
    if u_delta.width() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "input trajectory has {} channels, model has {}",
            u_delta.width(),
            model.input_dim()
        )));
    }
    let mut u = vec![0.0; model.input_dim()];
    let rows = rk4(grid, xi_delta0, |t, x, dx| {
        u_delta.sample_into(t, &mut u);
        dx.fill(0.0);
        gemv_acc(&model.a, x, dx);
        gemv_acc(&model.b, &u, dx);
        Ok(())
    })?;
    let relative = Trajectory::new(grid.to_vec(), rows, model.labels.states.clone())?;
    let xi_o: Vec<f64> = op.xi_o.iter().copied().collect();
    let absolute = relative.offset_by(|_| xi_o.clone());
    Ok(Simulation { relative, absolute })
}

/// Transfer matrix `C (jωI − A)⁻¹ B + D` at angular frequency `omega`.
pub fn frequency_response(model: &StateSpaceModel, omega: f64) -> Result<CMatrix> {
    let n = model.state_dim();
    let d = model.d.map(|v| Complex::new(v, 0.0));
    if n == 0 {
        return Ok(d);
    }
    let jw = Complex::new(0.0, omega);
    let resolvent = CMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { jw } else { Complex::new(0.0, 0.0) };
        diag - Complex::new(model.a[(i, j)], 0.0)
    });
    let scale = resolvent
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let lu = resolvent.lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    if min_pivot <= 1e-13 * scale {
        return Err(Error::PoleProximity { omega });
    }
    let b = model.b.map(|v| Complex::new(v, 0.0));
    let x = lu.solve(&b).ok_or(Error::PoleProximity { omega })?;
    let c = model.c.map(|v| Complex::new(v, 0.0));
    Ok(c * x + d)
}

/// Largest singular value of a complex matrix.
pub fn max_singular_value(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Frequency grid and refinement settings for H∞ estimation.
#[derive(Debug, Clone, Copy)]
pub struct HinfOptions {
    pub points: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Golden-section iterations around the grid peak (0 disables refinement).
    pub refine_iterations: usize,
}

impl Default for HinfOptions {
    fn default() -> Self {
        Self {
            points: 400,
            omega_min: 1e-3,
            omega_max: 1e2,
            refine_iterations: 40,
        }
    }
}

impl HinfOptions {
    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.omega_min.ln(), self.omega_max.ln());
        crate::trajectory::linspace(a, b, self.points)
            .into_iter()
            .map(f64::exp)
            .collect()
    }
}

/// Peak of `sigma(omega)` over the log grid, refined by golden-section
/// search in log-frequency around the best grid point.
fn peak_over_grid<F>(opts: &HinfOptions, mut sigma: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let grid = opts.grid();
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty frequency grid".into()));
    }
    let mut vals = Vec::with_capacity(grid.len());
    for &w in &grid {
        vals.push(sigma(w)?);
    }
    let (k, &best) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut peak = (best, grid[k]);
    if opts.refine_iterations == 0 || grid.len() < 3 {
        return Ok(peak);
    }
    let mut lo = grid[k.saturating_sub(1)].ln();
    let mut hi = grid[(k + 1).min(grid.len() - 1)].ln();
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = sigma(x1.exp())?;
    let mut f2 = sigma(x2.exp())?;
    for _ in 0..opts.refine_iterations {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = sigma(x1.exp())?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = sigma(x2.exp())?;
        }
    }
    for (f, x) in [(f1, x1), (f2, x2)] {
        if f > peak.0 {
            peak = (f, x.exp());
        }
    }
    Ok(peak)
}

/// Sampled H∞ norm of the difference `G_a − G_b`: the maximum largest
/// singular value over the frequency grid (a lower bound on the true norm).
pub fn hinf_error(a: &StateSpaceModel, b: &StateSpaceModel, opts: &HinfOptions) -> Result<f64> {
    if !a.same_io(b) {
        return Err(Error::Dimension(format!(
            "cannot compare {}x{} with {}x{} transfer matrices",
            a.output_dim(),
            a.input_dim(),
            b.output_dim(),
            b.input_dim()
        )));
    }
    let (peak, _) = peak_over_grid(opts, |w| {
        let diff = frequency_response(a, w)? - frequency_response(b, w)?;
        Ok(max_singular_value(&diff))
    })?;
    Ok(peak)
}

/// Sampled H∞ norm of a single model.
pub fn hinf_norm(model: &StateSpaceModel, opts: &HinfOptions) -> Result<f64> {
    let (peak, _) = peak_over_grid(opts, |w| {
        Ok(max_singular_value(&frequency_response(model, w)?))
    })?;
    Ok(peak)
}

/// Eigenvalues of `A`, sorted by real part then imaginary part.
pub fn eigenvalues(model: &StateSpaceModel) -> Vec<Complex<f64>> {
    sorted_eigenvalues(&model.a)
}

pub fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if a.nrows() == 0 {
        return vec![];
    }
    let mut ev: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    ev
}

/// Greedy nearest-neighbour matching of two eigenvalue sets; returns the
/// largest distance between matched pairs.
pub fn eigenvalue_deviation(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .min_by(|(_, p), (_, q)| (*p - x).norm().total_cmp(&(*q - x).norm()));
        match best {
            Some((j, y)) => {
                used[j] = true;
                worst = worst.max((y - x).norm());
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::uniform_grid;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn lag(gain: f64) -> StateSpaceModel {
        StateSpaceModel::from_abcd(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, gain),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    fn op_zero(n: usize, m: usize) -> OperatingPoint {
        OperatingPoint::new(0.0, DVector::zeros(n), DVector::zeros(m), [0.0, 0.0])
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let err = StateSpaceModel::from_abcd(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = StateSpaceModel::from_abcd(
            DMatrix::from_element(1, 1, f64::NAN),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn zero_dynamics_hold_initial_state() {
        let m = StateSpaceModel::from_abcd(
            DMatrix::zeros(3, 3),
            DMatrix::zeros(3, 2),
            DMatrix::zeros(1, 3),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        let u = Trajectory::constant(0.0, 1.0, &[3.0, -1.0], &["a", "b"]).unwrap();
        let v = [1.5, -2.0, 0.25];
        let sim = simulate_lti(&m, &op_zero(3, 2), &u, &v, &uniform_grid(0.0, 1.0, 0.1)).unwrap();
        for row in sim.relative.rows() {
            assert_eq!(row.as_slice(), &v);
        }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let m = lag(0.0);
        let u = Trajectory::constant(0.0, 1.0, &[0.0], &["u"]).unwrap();
        let sim = simulate_lti(
            &m,
            &op_zero(1, 1),
            &u,
            &[1.0],
            &uniform_grid(0.0, 1.0, 1e-3),
        )
        .unwrap();
        let x1 = sim.relative.rows().last().unwrap()[0];
        assert!(close(x1, (-1f64).exp(), 1e-6), "{x1}");
    }

    #[test]
    fn rk4_is_fourth_order() {
        let m = lag(0.0);
        let u = Trajectory::constant(0.0, 1.0, &[0.0], &["u"]).unwrap();
        let exact = (-1f64).exp();
        let err = |h: f64| {
            let sim =
                simulate_lti(&m, &op_zero(1, 1), &u, &[1.0], &uniform_grid(0.0, 1.0, h)).unwrap();
            (sim.relative.rows().last().unwrap()[0] - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn divergence_reports_time() {
        let m = StateSpaceModel::from_abcd(
            DMatrix::from_element(1, 1, 1e5),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let u = Trajectory::constant(0.0, 10.0, &[0.0], &["u"]).unwrap();
        let err = simulate_lti(
            &m,
            &op_zero(1, 1),
            &u,
            &[1.0],
            &uniform_grid(0.0, 10.0, 0.5),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { time } if time > 0.0));
    }

    #[test]
    fn first_order_lag_response() {
        let g0 = frequency_response(&lag(1.0), 0.0).unwrap()[(0, 0)];
        assert!(close(g0.re, 1.0, 1e-15) && g0.im.abs() < 1e-15);
        let g1 = frequency_response(&lag(1.0), 1.0).unwrap()[(0, 0)];
        assert!(close(g1.norm(), 0.5f64.sqrt(), 1e-14));
        assert!(close(g1.arg().to_degrees(), -45.0, 1e-12));
    }

    #[test]
    fn feedthrough_only_model() {
        let d = DMatrix::from_row_slice(2, 1, &[0.5, -3.0]);
        let m = StateSpaceModel::from_abcd(
            DMatrix::from_element(1, 1, -2.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(2, 1),
            d.clone(),
        )
        .unwrap();
        for w in [0.0, 0.3, 10.0] {
            let g = frequency_response(&m, w).unwrap();
            assert_eq!(g.map(|z| z.re), d);
        }
    }

    #[test]
    fn pole_on_axis_is_reported() {
        let m = StateSpaceModel::from_abcd(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(
            frequency_response(&m, 2.0),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn dc_gain_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, -0.2, -3.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let c = DMatrix::from_row_slice(1, 2, &[0.7, -1.1]);
        let d = DMatrix::from_element(1, 1, 0.3);
        let m = StateSpaceModel::from_abcd(a.clone(), b.clone(), c.clone(), d.clone()).unwrap();
        let expect = -(&c * a.try_inverse().unwrap() * &b) + &d;
        let g = frequency_response(&m, 0.0).unwrap();
        assert!(close(g[(0, 0)].re, expect[(0, 0)], 1e-14));
    }

    #[test]
    fn hinf_error_of_lags() {
        let opts = HinfOptions::default();
        assert_eq!(hinf_error(&lag(1.0), &lag(1.0), &opts).unwrap(), 0.0);
        let e = hinf_error(&lag(1.0), &lag(2.0), &opts).unwrap();
        // |1/(jω+1)| peaks at ω → 0; the grid starts at 1e-3.
        assert!(close(e, 1.0, 1e-6), "{e}");
    }

    #[test]
    fn hinf_error_dimension_mismatch() {
        let two = StateSpaceModel::from_abcd(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 2, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        assert!(matches!(
            hinf_error(&lag(1.0), &two, &HinfOptions::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn hinf_refinement_finds_resonance() {
        // Lightly damped second-order system; peak 1/(2ζ sqrt(1-ζ²)) at ω_n sqrt(1-2ζ²).
        let (wn, z) = (1.7, 0.01);
        let m = StateSpaceModel::from_abcd(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -wn * wn, -2.0 * z * wn]),
            DMatrix::from_row_slice(2, 1, &[0.0, wn * wn]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let exact = 1.0 / (2.0 * z * (1.0 - z * z).sqrt());
        let est = hinf_norm(&m, &HinfOptions::default()).unwrap();
        assert!((est - exact).abs() / exact < 1e-6, "{est} vs {exact}");
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = StateSpaceModel::from_abcd(
            DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0])),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let ev = eigenvalues(&m);
        assert_eq!(
            ev.iter().map(|z| z.re).collect::<Vec<_>>(),
            vec![-2.0, -1.0]
        );

        let osc = sorted_eigenvalues(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, 0.0]));
        assert!(close(osc[0].im, -2.0, 1e-12) && close(osc[1].im, 2.0, 1e-12));
        assert!(osc.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn record_round_trip() {
        let m = lag(2.0);
        let op = OperatingPoint::new(
            7.0,
            DVector::from_vec(vec![0.1]),
            DVector::from_vec(vec![3.0]),
            [40.0, 10.0],
        );
        let rec = ModelRecord::from_parts(&m, &op);
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"A\":[[-1.0]]"));
        let back: ModelRecord = serde_json::from_str(&json).unwrap();
        let (m2, op2) = back.into_parts().unwrap();
        assert_eq!(m2, m);
        assert_eq!(op2, op);
    }

    #[test]
    fn record_rejects_unknown_keys() {
        let rec = ModelRecord::from_parts(&lag(1.0), &op_zero(1, 1));
        let mut v = serde_json::to_value(&rec).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ModelRecord>(v).is_err());
    }
}
