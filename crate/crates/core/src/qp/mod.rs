//! Sparse convex (or mildly nonconvex) QP solver.
//!
//! ```text
//! minimize    ½ zᵀ H z + cᵀ z
//! subject to  A z = b,   G z ≤ h,   lb ≤ z ≤ ub
//! ```
//!
//! A primal-dual interior-point method with Mehrotra's predictor-corrector.
//! The reduced KKT system is factored by a banded LDLᵀ after ordering
//! variables and equality rows by stage, so a transcribed optimal-control
//! problem costs time linear in its horizon. Inertia correction keeps the
//! Newton system well posed when `H` is indefinite. A presolve removes fixed
//! variables and singleton rows, and an elastic phase-1 problem separates
//! genuinely infeasible problems from slow convergence.

mod band;
mod ipm;
mod presolve;

pub use band::{BandLdl, BandMatrix};

use serde::{Deserialize, Serialize};

/// Row-wise sparse matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRows {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows: Vec::new(),
        }
    }

    /// Appends a row, merging duplicate columns and dropping exact zeros.
    pub fn push(&mut self, entries: &[(usize, f64)]) -> usize {
        let mut row: Vec<(usize, f64)> = entries.to_vec();
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (j, v) in row {
            assert!(j < self.ncols, "column {j} out of range {}", self.ncols);
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        self.rows.push(merged);
        self.rows.len() - 1
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// `y = M x`.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    /// `y += Mᵀ v`.
    pub fn mul_t_acc(&self, v: &[f64], y: &mut [f64]) {
        for (row, &vi) in self.rows.iter().zip(v) {
            if vi != 0.0 {
                for &(j, a) in row {
                    y[j] += a * vi;
                }
            }
        }
    }
}

/// A quadratic program in the form documented at module level.
#[derive(Debug, Clone)]
pub struct QpProblem {
    n: usize,
    hess: Vec<(usize, usize, f64)>,
    c: Vec<f64>,
    obj_const: f64,
    eq: SparseRows,
    b: Vec<f64>,
    ineq: SparseRows,
    h: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    stage: Option<Vec<usize>>,
}

impl QpProblem {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            hess: Vec::new(),
            c: vec![0.0; n],
            obj_const: 0.0,
            eq: SparseRows::new(n),
            b: Vec::new(),
            ineq: SparseRows::new(n),
            h: Vec::new(),
            lb: vec![f64::NEG_INFINITY; n],
            ub: vec![f64::INFINITY; n],
            stage: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_eq(&self) -> usize {
        self.b.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.h.len()
    }

    /// Adds `v` to both `H[i, j]` and `H[j, i]` (once on the diagonal).
    pub fn add_hessian(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n && j < self.n);
        if v != 0.0 {
            self.hess.push((i.max(j), i.min(j), v));
        }
    }

    pub fn hessian(&self) -> &[(usize, usize, f64)] {
        &self.hess
    }

    pub fn add_linear(&mut self, j: usize, v: f64) {
        self.c[j] += v;
    }

    pub fn linear(&self) -> &[f64] {
        &self.c
    }

    pub fn add_constant(&mut self, v: f64) {
        self.obj_const += v;
    }

    pub fn constant(&self) -> f64 {
        self.obj_const
    }

    pub fn add_eq(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        self.b.push(rhs);
        self.eq.push(entries)
    }

    pub fn add_ineq(&mut self, entries: &[(usize, f64)], rhs: f64) -> usize {
        self.h.push(rhs);
        self.ineq.push(entries)
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lb[j] = lo;
        self.ub[j] = hi;
    }

    pub fn eq_rows(&self) -> (&SparseRows, &[f64]) {
        (&self.eq, &self.b)
    }

    pub fn ineq_rows(&self) -> (&SparseRows, &[f64]) {
        (&self.ineq, &self.h)
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lb, &self.ub)
    }

    /// Assigns each variable to a stage. Variables and equality rows are
    /// ordered by stage in the KKT system, which keeps it banded when
    /// constraints only couple neighbouring stages.
    pub fn set_stages(&mut self, stage: Vec<usize>) {
        assert_eq!(stage.len(), self.n);
        self.stage = Some(stage);
    }

    pub fn stages(&self) -> Option<&[usize]> {
        self.stage.as_deref()
    }

    /// `y = H x`.
    pub fn hess_mul(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        hess_mul_acc(&self.hess, x, y);
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let mut hz = vec![0.0; self.n];
        self.hess_mul(z, &mut hz);
        let quad: f64 = z.iter().zip(&hz).map(|(a, b)| a * b).sum();
        let lin: f64 = z.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        0.5 * quad + lin + self.obj_const
    }
}

pub(crate) fn hess_mul_acc(hess: &[(usize, usize, f64)], x: &[f64], y: &mut [f64]) {
    for &(i, j, v) in hess {
        if i == j {
            y[i] += v * x[i];
        } else {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Relative tolerance on primal, dual and complementarity residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Run the elastic feasibility problem when the main solve fails.
    pub phase_one: bool,
    pub reg_primal: f64,
    pub reg_dual: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            phase_one: true,
            reg_primal: 1e-9,
            reg_dual: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

/// Relative KKT residuals, each normalized by `1 + ‖data‖∞`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

/// Primal point and multipliers for the Lagrangian
/// `½zᵀHz + cᵀz + yᵀ(Az − b) + λᵀ(Gz − h) − ν_lᵀ(z − lb) + ν_uᵀ(z − ub)`.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: QpStatus,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu_lower: Vec<f64>,
    pub nu_upper: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub residuals: KktResiduals,
    /// Optimal elastic violation when phase-1 ran, else `None`.
    pub infeasibility: Option<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter()
        .filter(|x| x.is_finite())
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// KKT residuals of `(z, y, λ, ν)` for `qp`.
pub fn kkt_residuals(
    qp: &QpProblem,
    z: &[f64],
    y: &[f64],
    lambda: &[f64],
    nu_lower: &[f64],
    nu_upper: &[f64],
) -> KktResiduals {
    let n = qp.n;
    let mut g = vec![0.0; n];
    qp.hess_mul(z, &mut g);
    for j in 0..n {
        g[j] += qp.c[j] - nu_lower[j] + nu_upper[j];
    }
    qp.eq.mul_t_acc(y, &mut g);
    qp.ineq.mul_t_acc(lambda, &mut g);
    let stationarity = inf_norm(&g) / (1.0 + inf_norm(&qp.c));

    let mut primal = 0.0f64;
    for i in 0..qp.b.len() {
        primal = primal.max((qp.eq.row_dot(i, z) - qp.b[i]).abs());
    }
    let mut comp = 0.0f64;
    for i in 0..qp.h.len() {
        let slack = qp.h[i] - qp.ineq.row_dot(i, z);
        primal = primal.max(-slack);
        comp = comp
            .max((lambda[i] * slack).abs())
            .max((-lambda[i]).max(0.0));
    }
    for j in 0..n {
        if qp.lb[j].is_finite() {
            primal = primal.max(qp.lb[j] - z[j]);
            comp = comp
                .max((nu_lower[j] * (z[j] - qp.lb[j])).abs())
                .max((-nu_lower[j]).max(0.0));
        }
        if qp.ub[j].is_finite() {
            primal = primal.max(z[j] - qp.ub[j]);
            comp = comp
                .max((nu_upper[j] * (qp.ub[j] - z[j])).abs())
                .max((-nu_upper[j]).max(0.0));
        }
    }
    let data = 1.0
        + inf_norm(&qp.b)
            .max(inf_norm(&qp.h))
            .max(inf_norm(&qp.lb))
            .max(inf_norm(&qp.ub));
    KktResiduals {
        stationarity,
        primal: primal.max(0.0) / data,
        complementarity: comp / (1.0 + qp.objective(z).abs()),
    }
}

/// Solves `qp`.
pub fn solve(qp: &QpProblem, opts: &QpOptions) -> QpSolution {
    let pre = match presolve::Presolved::new(qp) {
        Ok(p) => p,
        Err(_) => return infeasible(qp, 0, None),
    };
    let reduced = pre.reduced();
    let res = ipm::run(reduced, opts);
    let (status, violation) = match res.status {
        ipm::Outcome::Converged => (QpStatus::Optimal, None),
        ipm::Outcome::Stalled if opts.phase_one => {
            let v = ipm::elastic_violation(reduced, opts);
            let scale = 1.0 + inf_norm(&reduced.b).max(inf_norm(&reduced.h));
            if v > 1e3 * opts.tol * scale {
                (QpStatus::Infeasible, Some(v))
            } else {
                (QpStatus::MaxIter, Some(v))
            }
        }
        ipm::Outcome::Stalled => (QpStatus::MaxIter, None),
    };
    if status == QpStatus::Infeasible {
        return infeasible(qp, res.iterations, violation);
    }
    let full = pre.postsolve(qp, &res);
    let residuals = kkt_residuals(
        qp,
        &full.z,
        &full.y,
        &full.lambda,
        &full.nu_lower,
        &full.nu_upper,
    );
    QpSolution {
        status,
        objective: qp.objective(&full.z),
        z: full.z,
        y: full.y,
        lambda: full.lambda,
        nu_lower: full.nu_lower,
        nu_upper: full.nu_upper,
        iterations: res.iterations,
        residuals,
        infeasibility: violation,
    }
}

fn infeasible(qp: &QpProblem, iterations: usize, violation: Option<f64>) -> QpSolution {
    QpSolution {
        status: QpStatus::Infeasible,
        z: vec![f64::NAN; qp.n],
        y: vec![f64::NAN; qp.b.len()],
        lambda: vec![f64::NAN; qp.h.len()],
        nu_lower: vec![f64::NAN; qp.n],
        nu_upper: vec![f64::NAN; qp.n],
        objective: f64::NAN,
        iterations,
        residuals: KktResiduals {
            stationarity: f64::NAN,
            primal: f64::NAN,
            complementarity: f64::NAN,
        },
        infeasibility: violation,
    }
}

#[cfg(test)]
mod tests;
