//! Independent oracles shared by integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use fowt_ccd::qp::QpProblem;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense strictly convex QP: `min ½zᵀHz + cᵀz  s.t.  Az = b, Gz ≤ h`.
#[derive(Debug, Clone)]
pub struct DenseQp {
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub hv: DVector<f64>,
}

fn normal<R: Rng>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random feasible instance with a strictly convex objective.
pub fn random_qp<R: Rng>(rng: &mut R, n: usize, m: usize, p: usize) -> DenseQp {
    let l = normal(rng, n, n) / (n as f64).sqrt();
    let h = &l * l.transpose() + DMatrix::identity(n, n) * 0.1;
    let c = normal(rng, n, 1).column(0).into_owned();
    let a = normal(rng, m, n);
    let g = normal(rng, p, n);
    let zf = normal(rng, n, 1).column(0).into_owned();
    let b = &a * &zf;
    let slack = DVector::from_fn(p, |_, _| {
        if rng.random::<f64>() < 0.3 {
            0.0
        } else {
            rng.random::<f64>()
        }
    });
    let hv = &g * &zf + slack;
    DenseQp { h, c, a, b, g, hv }
}

impl DenseQp {
    pub fn to_problem(&self) -> QpProblem {
        let n = self.c.len();
        let mut qp = QpProblem::new(n);
        for i in 0..n {
            for j in 0..=i {
                qp.add_hessian(i, j, self.h[(i, j)]);
            }
            qp.add_linear(i, self.c[i]);
        }
        let row = |m: &DMatrix<f64>, r: usize| -> Vec<(usize, f64)> {
            (0..n).map(|j| (j, m[(r, j)])).collect()
        };
        for r in 0..self.b.len() {
            qp.add_eq(&row(&self.a, r), self.b[r]);
        }
        for r in 0..self.hv.len() {
            qp.add_ineq(&row(&self.g, r), self.hv[r]);
        }
        qp
    }

    /// Exhaustive active-set enumeration. For every subset `S` of the
    /// inequality rows, solves the equality-constrained problem with `S`
    /// active and returns the first point that is primal feasible with
    /// nonnegative multipliers. Subsets are visited depth first with an
    /// incrementally grown Cholesky factor of the Schur complement.
    pub fn enumerate(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.c.len();
        let m = self.b.len();
        let p = self.hv.len();
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&self.h);
        kkt.view_mut((n, 0), (m, n)).copy_from(&self.a);
        kkt.view_mut((0, n), (n, m)).copy_from(&self.a.transpose());
        let lu = kkt.lu();
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-&self.c));
        rhs.rows_mut(n, m).copy_from(&self.b);
        let zu = lu.solve(&rhs)?.rows(0, n).into_owned();
        let mut gt = DMatrix::zeros(n + m, p);
        gt.view_mut((0, 0), (n, p)).copy_from(&self.g.transpose());
        let pg = lu.solve(&gt)?.rows(0, n).into_owned();
        let schur = &self.g * &pg;
        let v = &self.g * &zu - &self.hv;

        let mut search = Search {
            schur: &schur,
            v: &v,
            pg: &pg,
            zu: &zu,
            g: &self.g,
            hv: &self.hv,
            set: Vec::new(),
            chol: Vec::new(),
            found: None,
        };
        search.visit(0);
        search.found
    }
}

struct Search<'a> {
    schur: &'a DMatrix<f64>,
    v: &'a DVector<f64>,
    pg: &'a DMatrix<f64>,
    zu: &'a DVector<f64>,
    g: &'a DMatrix<f64>,
    hv: &'a DVector<f64>,
    set: Vec<usize>,
    /// Rows of the lower Cholesky factor of `schur[set, set]`.
    chol: Vec<Vec<f64>>,
    found: Option<(DVector<f64>, DVector<f64>)>,
}

impl Search<'_> {
    fn check(&mut self) {
        let k = self.set.len();
        let mut w = vec![0.0; k];
        for i in 0..k {
            let mut s = self.v[self.set[i]];
            for j in 0..i {
                s -= self.chol[i][j] * w[j];
            }
            w[i] = s / self.chol[i][i];
        }
        let mut lam = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = w[i];
            for j in i + 1..k {
                s -= self.chol[j][i] * lam[j];
            }
            lam[i] = s / self.chol[i][i];
        }
        if lam.iter().any(|&l| l < -1e-10) {
            return;
        }
        let mut z = self.zu.clone();
        for (i, &r) in self.set.iter().enumerate() {
            z -= self.pg.column(r) * lam[i];
        }
        let slack = self.hv - self.g * &z;
        if slack.iter().all(|&s| s >= -1e-9) {
            let mut full = DVector::zeros(self.hv.len());
            for (i, &r) in self.set.iter().enumerate() {
                full[r] = lam[i].max(0.0);
            }
            self.found = Some((z, full));
        }
    }

    fn visit(&mut self, start: usize) {
        self.check();
        if self.found.is_some() {
            return;
        }
        for r in start..self.hv.len() {
            let k = self.set.len();
            let mut row = vec![0.0; k + 1];
            for i in 0..k {
                let mut s = self.schur[(r, self.set[i])];
                for j in 0..i {
                    s -= row[j] * self.chol[i][j];
                }
                row[i] = s / self.chol[i][i];
            }
            let d = self.schur[(r, r)] - row[..k].iter().map(|x| x * x).sum::<f64>();
            if d <= 1e-12 * (1.0 + self.schur[(r, r)].abs()) {
                continue;
            }
            row[k] = d.sqrt();
            self.set.push(r);
            self.chol.push(row);
            self.visit(r + 1);
            self.set.pop();
            self.chol.pop();
            if self.found.is_some() {
                return;
            }
        }
    }
}
