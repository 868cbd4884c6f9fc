//! Trapezoidal direct transcription of a linear-quadratic dynamic
//! optimization problem on an arbitrary time mesh.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::trapz_weights;
use crate::qp::QpProblem;

/// Inequality `coeffs · v ≤ upper` over one stage's `[ξ; u]` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRow {
    pub coeffs: Vec<(usize, f64)>,
    pub upper: f64,
}

/// Data attached to one mesh point. The stage vector is `v = [ξ; u]`.
#[derive(Debug, Clone)]
pub struct LqdoStage {
    /// `dξ/dt = A ξ + B u + f`.
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub f: DVector<f64>,
    /// Integrand `½ vᵀQv + qᵀv + q0`; `Q` as triplets with
    /// [`QpProblem::add_hessian`] semantics.
    pub q_hess: Vec<(usize, usize, f64)>,
    pub q_lin: Vec<f64>,
    pub q_const: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<StageRow>,
}

impl LqdoStage {
    /// Unconstrained stage with zero cost.
    pub fn free(a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        let (n, m) = (a.nrows(), b.ncols());
        Self {
            f: DVector::zeros(n),
            a,
            b,
            q_hess: Vec::new(),
            q_lin: vec![0.0; n + m],
            q_const: 0.0,
            lower: vec![f64::NEG_INFINITY; n + m],
            upper: vec![f64::INFINITY; n + m],
            rows: Vec::new(),
        }
    }

    /// `½ vᵀQv + qᵀv + q0`.
    pub fn integrand(&self, v: &[f64]) -> f64 {
        let mut s = self.q_const;
        for &(i, j, q) in &self.q_hess {
            s += if i == j {
                0.5 * q * v[i] * v[i]
            } else {
                q * v[i] * v[j]
            };
        }
        s + self.q_lin.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct Lqdo {
    pub n_states: usize,
    pub n_inputs: usize,
    pub times: Vec<f64>,
    pub stages: Vec<LqdoStage>,
    pub initial: Option<Vec<f64>>,
    pub terminal: Option<Vec<f64>>,
    /// Variable scale per stage component; the QP works in `v / scale`.
    pub scale: Vec<f64>,
}

/// The QP produced by [`transcribe_lqdo`] plus the bookkeeping needed to
/// map its solution back.
#[derive(Debug, Clone)]
pub struct TranscribedQp {
    pub qp: QpProblem,
    pub n_states: usize,
    pub n_inputs: usize,
    pub times: Vec<f64>,
    /// Trapezoidal quadrature weights of the mesh.
    pub weights: Vec<f64>,
    pub scale: Vec<f64>,
    /// Factor applied to the objective inside the QP.
    pub objective_scale: f64,
    pub defect_rows: usize,
    pub initial_rows: usize,
    pub terminal_rows: usize,
    /// Stage that each inequality row refers to.
    pub ineq_stage: Vec<usize>,
}

impl TranscribedQp {
    pub fn stage_width(&self) -> usize {
        self.n_states + self.n_inputs
    }

    /// Index of component `k` of stage `i` in the decision vector.
    pub fn var(&self, i: usize, k: usize) -> usize {
        i * self.stage_width() + k
    }

    /// Per-stage `[ξ; u]` in physical units from a scaled QP solution.
    pub fn unscale(&self, z: &[f64]) -> Vec<Vec<f64>> {
        z.chunks(self.stage_width())
            .map(|c| c.iter().zip(&self.scale).map(|(a, s)| a * s).collect())
            .collect()
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!(
            "{what}: length {got}, expected {want}"
        )));
    }
    Ok(())
}

/// Builds the sparse QP: variables stage by stage, trapezoidal defects
/// `ξ_{i+1} − ξ_i = (h_i/2)(f_i + f_{i+1})`, optional initial and terminal
/// state equalities, per-stage bounds and rows, and the trapezoid-weighted
/// objective.
pub fn transcribe_lqdo(p: &Lqdo) -> Result<TranscribedQp> {
    let (n, m) = (p.n_states, p.n_inputs);
    let w = n + m;
    let nt = p.times.len();
    if nt < 2 {
        return Err(Error::InvalidInput("mesh needs at least two points".into()));
    }
    if p.times.windows(2).any(|t| !(t[1] > t[0])) {
        return Err(Error::InvalidInput(
            "mesh must be strictly increasing".into(),
        ));
    }
    check_len("stages", p.stages.len(), nt)?;
    check_len("scale", p.scale.len(), w)?;
    if p.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidInput(
            "scales must be positive and finite".into(),
        ));
    }
    for st in &p.stages {
        if st.a.shape() != (n, n) || st.b.shape() != (n, m) || st.f.len() != n {
            return Err(Error::Dimension(
                "stage dynamics do not match the state/input sizes".into(),
            ));
        }
        check_len("stage linear cost", st.q_lin.len(), w)?;
        check_len("stage bounds", st.lower.len(), w)?;
        check_len("stage bounds", st.upper.len(), w)?;
        let finite =
            st.a.iter()
                .chain(st.b.iter())
                .chain(st.f.iter())
                .all(|v| v.is_finite())
                && st.q_lin.iter().all(|v| v.is_finite())
                && st.q_hess.iter().all(|e| e.2.is_finite());
        if !finite {
            return Err(Error::NonFinite("stage data".into()));
        }
    }

    let s = &p.scale;
    let weights = trapz_weights(&p.times);
    let span = p.times[nt - 1] - p.times[0];
    // Per-stage weights of order one keep multipliers well scaled.
    let objective_scale = (nt - 1) as f64 / span;
    let mut qp = QpProblem::new(nt * w);
    let var = |i: usize, k: usize| i * w + k;

    for (i, st) in p.stages.iter().enumerate() {
        let wi = weights[i] * objective_scale;
        for &(a, b, q) in &st.q_hess {
            qp.add_hessian(var(i, a), var(i, b), wi * q * s[a] * s[b]);
        }
        for k in 0..w {
            qp.add_linear(var(i, k), wi * st.q_lin[k] * s[k]);
            qp.set_bounds(var(i, k), st.lower[k] / s[k], st.upper[k] / s[k]);
        }
        qp.add_constant(wi * st.q_const);
    }

    let mut row = Vec::with_capacity(2 * w);
    let mut defect_rows = 0;
    for i in 0..nt - 1 {
        let hh = 0.5 * (p.times[i + 1] - p.times[i]);
        let (s0, s1) = (&p.stages[i], &p.stages[i + 1]);
        for k in 0..n {
            row.clear();
            let sk = s[k];
            for (stage, st, sign) in [(i, s0, -1.0), (i + 1, s1, 1.0)] {
                for j in 0..n {
                    let mut v = -hh * st.a[(k, j)] * s[j] / sk;
                    if j == k {
                        v += sign;
                    }
                    row.push((var(stage, j), v));
                }
                for j in 0..m {
                    row.push((var(stage, n + j), -hh * st.b[(k, j)] * s[n + j] / sk));
                }
            }
            qp.add_eq(&row, hh * (s0.f[k] + s1.f[k]) / sk);
            defect_rows += 1;
        }
    }
    let mut boundary = |i: usize, x: &[f64]| -> Result<usize> {
        check_len("boundary state", x.len(), n)?;
        for k in 0..n {
            qp.add_eq(&[(var(i, k), 1.0)], x[k] / s[k]);
        }
        Ok(n)
    };
    let initial_rows = match &p.initial {
        Some(x) => boundary(0, x)?,
        None => 0,
    };
    let terminal_rows = match &p.terminal {
        Some(x) => boundary(nt - 1, x)?,
        None => 0,
    };

    let mut ineq_stage = Vec::new();
    for (i, st) in p.stages.iter().enumerate() {
        for r in &st.rows {
            row.clear();
            row.extend(r.coeffs.iter().map(|&(k, v)| (var(i, k), v * s[k])));
            let norm = row.iter().fold(0.0f64, |a, e| a.max(e.1.abs()));
            let norm = if norm > 0.0 { norm } else { 1.0 };
            row.iter_mut().for_each(|e| e.1 /= norm);
            qp.add_ineq(&row, r.upper / norm);
            ineq_stage.push(i);
        }
    }
    qp.set_stages((0..nt * w).map(|j| j / w).collect());

    Ok(TranscribedQp {
        qp,
        n_states: n,
        n_inputs: m,
        times: p.times.clone(),
        weights,
        scale: s.clone(),
        objective_scale,
        defect_rows,
        initial_rows,
        terminal_rows,
        ineq_stage,
    })
}
