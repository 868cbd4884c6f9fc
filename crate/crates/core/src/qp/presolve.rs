//! Removes fixed variables and singleton rows before the interior-point
//! solve, then maps the reduced solution and multipliers back.

use super::{hess_mul_acc, QpProblem, SparseRows};
use crate::qp::ipm::IpmResult;

/// Problem left after presolve, in the solver's internal form.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub n: usize,
    pub hess: Vec<(usize, usize, f64)>,
    pub c: Vec<f64>,
    pub a: SparseRows,
    pub b: Vec<f64>,
    pub g: SparseRows,
    pub h: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub stage: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Source {
    User,
    /// Bound implied by singleton inequality row `(row, coefficient)`.
    Row(usize, f64),
}

#[derive(Debug)]
pub(crate) struct Infeasible;

pub(crate) struct Presolved {
    reduced: Reduced,
    /// Reduced index of each original variable, `None` when fixed.
    var_map: Vec<Option<usize>>,
    fixed: Vec<Option<f64>>,
    eq_map: Vec<Option<usize>>,
    ineq_map: Vec<Option<usize>>,
    /// Singleton equality rows in the order they fixed a variable.
    eq_fix: Vec<(usize, usize, f64)>,
    lower_src: Vec<Source>,
    upper_src: Vec<Source>,
}

pub(crate) struct FullSolution {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu_lower: Vec<f64>,
    pub nu_upper: Vec<f64>,
}

fn feas_tol(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

impl Presolved {
    pub fn new(qp: &QpProblem) -> Result<Self, Infeasible> {
        let n = qp.n;
        let mut lb = qp.lb.clone();
        let mut ub = qp.ub.clone();
        let finite = qp.c.iter().chain(&qp.b).chain(&qp.h).all(|v| v.is_finite())
            && qp.hess.iter().all(|e| e.2.is_finite())
            && lb.iter().chain(&ub).all(|v| !v.is_nan());
        assert!(finite, "QP data must be finite");
        let mut lower_src = vec![Source::User; n];
        let mut upper_src = vec![Source::User; n];

        let mut ineq_keep = vec![true; qp.h.len()];
        for (r, row) in qp.ineq.rows().iter().enumerate() {
            match row.as_slice() {
                [] => {
                    if qp.h[r] < -feas_tol(qp.h[r]) {
                        return Err(Infeasible);
                    }
                    ineq_keep[r] = false;
                }
                &[(j, a)] => {
                    let bound = qp.h[r] / a;
                    if a > 0.0 {
                        if bound < ub[j] {
                            ub[j] = bound;
                            upper_src[j] = Source::Row(r, a);
                        }
                    } else if bound > lb[j] {
                        lb[j] = bound;
                        lower_src[j] = Source::Row(r, a);
                    }
                    ineq_keep[r] = false;
                }
                _ => {}
            }
        }
        for j in 0..n {
            if lb[j] > ub[j] + feas_tol(lb[j].max(ub[j])) {
                return Err(Infeasible);
            }
            if lb[j] > ub[j] {
                let m = 0.5 * (lb[j] + ub[j]);
                lb[j] = m;
                ub[j] = m;
            }
        }

        let mut fixed: Vec<Option<f64>> =
            (0..n).map(|j| (lb[j] == ub[j]).then_some(lb[j])).collect();
        let mut eq_keep = vec![true; qp.b.len()];
        let mut eq_fix = Vec::new();
        loop {
            let mut changed = false;
            for (r, row) in qp.eq.rows().iter().enumerate() {
                if !eq_keep[r] {
                    continue;
                }
                let mut rhs = qp.b[r];
                let mut free = None;
                let mut nfree = 0;
                for &(j, a) in row {
                    match fixed[j] {
                        Some(v) => rhs -= a * v,
                        None => {
                            nfree += 1;
                            free = Some((j, a));
                        }
                    }
                }
                match (nfree, free) {
                    (0, _) => {
                        if rhs.abs() > feas_tol(qp.b[r]) {
                            return Err(Infeasible);
                        }
                        eq_keep[r] = false;
                    }
                    (1, Some((j, a))) => {
                        let v = rhs / a;
                        let tol = feas_tol(v);
                        if v < lb[j] - tol || v > ub[j] + tol {
                            return Err(Infeasible);
                        }
                        fixed[j] = Some(v.clamp(lb[j], ub[j]));
                        eq_fix.push((r, j, a));
                        eq_keep[r] = false;
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }

        let mut var_map = vec![None; n];
        let mut nr = 0;
        for j in 0..n {
            if fixed[j].is_none() {
                var_map[j] = Some(nr);
                nr += 1;
            }
        }
        let stage_full: Vec<usize> = qp.stage.clone().unwrap_or_else(|| vec![0; n]);
        let mut c = vec![0.0; nr];
        let mut r_lb = vec![0.0; nr];
        let mut r_ub = vec![0.0; nr];
        let mut stage = vec![0; nr];
        for j in 0..n {
            if let Some(k) = var_map[j] {
                c[k] = qp.c[j];
                r_lb[k] = lb[j];
                r_ub[k] = ub[j];
                stage[k] = stage_full[j];
            }
        }
        let mut hess = Vec::new();
        for &(i, j, v) in &qp.hess {
            match (var_map[i], var_map[j]) {
                (Some(p), Some(q)) => hess.push((p.max(q), p.min(q), v)),
                (Some(p), None) => c[p] += v * fixed[j].unwrap(),
                (None, Some(q)) => c[q] += v * fixed[i].unwrap(),
                (None, None) => {}
            }
        }

        let reduce_rows =
            |src: &SparseRows,
             rhs_src: &[f64],
             keep: &mut [bool],
             check_ineq: bool|
             -> Result<(SparseRows, Vec<f64>, Vec<Option<usize>>), Infeasible> {
                let mut out = SparseRows::new(nr);
                let mut rhs = Vec::new();
                let mut map = vec![None; rhs_src.len()];
                let mut buf = Vec::new();
                for (r, row) in src.rows().iter().enumerate() {
                    if !keep[r] {
                        continue;
                    }
                    buf.clear();
                    let mut v = rhs_src[r];
                    for &(j, a) in row {
                        match var_map[j] {
                            Some(k) => buf.push((k, a)),
                            None => v -= a * fixed[j].unwrap(),
                        }
                    }
                    if buf.is_empty() {
                        let bad = if check_ineq {
                            v < -feas_tol(rhs_src[r])
                        } else {
                            v.abs() > feas_tol(rhs_src[r])
                        };
                        if bad {
                            return Err(Infeasible);
                        }
                        keep[r] = false;
                        continue;
                    }
                    if check_ineq {
                        let lo: f64 = buf
                            .iter()
                            .map(|&(k, a)| if a > 0.0 { a * r_lb[k] } else { a * r_ub[k] })
                            .sum();
                        if lo > v + feas_tol(v) {
                            return Err(Infeasible);
                        }
                    }
                    map[r] = Some(out.push(&buf));
                    rhs.push(v);
                }
                Ok((out, rhs, map))
            };
        let (a, b, eq_map) = reduce_rows(&qp.eq, &qp.b, &mut eq_keep, false)?;
        let (g, h, ineq_map) = reduce_rows(&qp.ineq, &qp.h, &mut ineq_keep, true)?;

        Ok(Self {
            reduced: Reduced {
                n: nr,
                hess,
                c,
                a,
                b,
                g,
                h,
                lb: r_lb,
                ub: r_ub,
                stage,
            },
            var_map,
            fixed,
            eq_map,
            ineq_map,
            eq_fix,
            lower_src,
            upper_src,
        })
    }

    pub fn reduced(&self) -> &Reduced {
        &self.reduced
    }

    pub fn postsolve(&self, qp: &QpProblem, res: &IpmResult) -> FullSolution {
        let n = qp.n;
        let z: Vec<f64> = (0..n)
            .map(|j| match self.var_map[j] {
                Some(k) => res.z[k],
                None => self.fixed[j].unwrap(),
            })
            .collect();
        let y: Vec<f64> = self
            .eq_map
            .iter()
            .map(|m| m.map_or(0.0, |k| res.y[k]))
            .collect();
        let mut lambda: Vec<f64> = self
            .ineq_map
            .iter()
            .map(|m| m.map_or(0.0, |k| res.lambda[k]))
            .collect();
        let mut y = y;
        let mut nu_lower = vec![0.0; n];
        let mut nu_upper = vec![0.0; n];
        for j in 0..n {
            if let Some(k) = self.var_map[j] {
                nu_lower[j] = res.nu_lower[k];
                nu_upper[j] = res.nu_upper[k];
            }
        }

        // Gradient of the Lagrangian without the multipliers still unknown.
        let mut grad = qp.c.clone();
        hess_mul_acc(&qp.hess, &z, &mut grad);
        qp.eq.mul_t_acc(&y, &mut grad);
        qp.ineq.mul_t_acc(&lambda, &mut grad);
        for &(r, j, a) in self.eq_fix.iter().rev() {
            let yr = -grad[j] / a;
            y[r] = yr;
            for &(k, v) in qp.eq.row(r) {
                grad[k] += v * yr;
            }
        }
        for j in 0..n {
            if self.var_map[j].is_none() {
                let gj = grad[j];
                if self.eq_fix.iter().any(|e| e.1 == j) {
                    continue;
                }
                if gj > 0.0 {
                    nu_lower[j] = gj;
                } else {
                    nu_upper[j] = -gj;
                }
            }
        }
        for j in 0..n {
            if let Source::Row(r, a) = self.lower_src[j] {
                lambda[r] = nu_lower[j] / a.abs();
                nu_lower[j] = 0.0;
            }
            if let Source::Row(r, a) = self.upper_src[j] {
                lambda[r] = nu_upper[j] / a.abs();
                nu_upper[j] = 0.0;
            }
        }
        FullSolution {
            z,
            y,
            lambda,
            nu_lower,
            nu_upper,
        }
    }
}
