//! Mehrotra predictor-corrector on the presolved problem.

use super::band::{BandLdl, BandMatrix};
use super::presolve::Reduced;
use super::{hess_mul_acc, QpOptions, SparseRows};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Converged,
    /// Iteration limit, vanishing steps or diverging iterates.
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: Outcome,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    /// Multipliers of the general inequality rows.
    pub lambda: Vec<f64>,
    pub nu_lower: Vec<f64>,
    pub nu_upper: Vec<f64>,
    pub iterations: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// KKT ordering: variables and equality rows sorted by stage.
struct Layout {
    pos_var: Vec<usize>,
    pos_eq: Vec<usize>,
    nk: usize,
    bw: usize,
}

impl Layout {
    fn new(red: &Reduced, g: &SparseRows) -> Self {
        let n = red.n;
        let m = red.b.len();
        let mut keys: Vec<(usize, u8, usize)> = Vec::with_capacity(n + m);
        keys.extend((0..n).map(|j| (red.stage[j], 0, j)));
        for (r, row) in red.a.rows().iter().enumerate() {
            let s = row.iter().map(|&(j, _)| red.stage[j]).min().unwrap_or(0);
            keys.push((s, 1, r));
        }
        keys.sort_unstable();
        let mut pos_var = vec![0; n];
        let mut pos_eq = vec![0; m];
        for (p, &(_, kind, i)) in keys.iter().enumerate() {
            if kind == 0 {
                pos_var[i] = p;
            } else {
                pos_eq[i] = p;
            }
        }
        let mut bw = 0usize;
        for &(i, j, _) in &red.hess {
            bw = bw.max(pos_var[i].abs_diff(pos_var[j]));
        }
        for row in g.rows() {
            let lo = row.iter().map(|e| pos_var[e.0]).min();
            let hi = row.iter().map(|e| pos_var[e.0]).max();
            if let (Some(lo), Some(hi)) = (lo, hi) {
                bw = bw.max(hi - lo);
            }
        }
        for (r, row) in red.a.rows().iter().enumerate() {
            for &(j, _) in row {
                bw = bw.max(pos_eq[r].abs_diff(pos_var[j]));
            }
        }
        Self {
            pos_var,
            pos_eq,
            nk: n + m,
            bw,
        }
    }
}

/// Factored Newton system with inertia correction.
struct Newton<'a> {
    red: &'a Reduced,
    g: &'a SparseRows,
    lay: Layout,
    opts: QpOptions,
    kkt: BandMatrix,
    fac: Option<BandLdl>,
    delta_last: f64,
}

impl<'a> Newton<'a> {
    fn new(red: &'a Reduced, g: &'a SparseRows, opts: QpOptions) -> Self {
        let lay = Layout::new(red, g);
        let kkt = BandMatrix::zeros(lay.nk, lay.bw);
        Self {
            red,
            g,
            lay,
            opts,
            kkt,
            fac: None,
            delta_last: 0.0,
        }
    }

    /// Assembles and factors `[H + GᵀΣG + δI, Aᵀ; A, 0]`, raising `δ` until
    /// the inertia shows exactly one negative pivot per equality row.
    fn factor(&mut self, sigma: &[f64]) -> bool {
        let m = self.red.b.len();
        let pv = &self.lay.pos_var;
        let pe = &self.lay.pos_eq;
        let mut base = BandMatrix::zeros(self.lay.nk, self.lay.bw);
        for &(i, j, v) in &self.red.hess {
            base.add(pv[i], pv[j], v);
        }
        for (row, &s) in self.g.rows().iter().zip(sigma) {
            if s == 0.0 {
                continue;
            }
            for a in 0..row.len() {
                let (ja, va) = row[a];
                for &(jb, vb) in &row[..=a] {
                    base.add(pv[ja], pv[jb], s * va * vb);
                }
            }
        }
        for (r, row) in self.red.a.rows().iter().enumerate() {
            for &(j, v) in row {
                base.add(pe[r], pv[j], v);
            }
        }
        let mut delta = 0.0f64;
        for _ in 0..80 {
            let mut k = base.clone();
            for &p in pv {
                k.add(p, p, delta + self.opts.reg_primal);
            }
            for &p in pe {
                k.add(p, p, -self.opts.reg_dual);
            }
            if let Some(f) = BandLdl::factor(&k) {
                if f.negative_pivots() == m && f.min_abs_pivot() > 1e-300 {
                    if delta > 0.0 {
                        for &p in pv {
                            base.add(p, p, delta);
                        }
                        self.delta_last = delta;
                    }
                    self.kkt = base;
                    self.fac = Some(f);
                    return true;
                }
            }
            delta = if delta == 0.0 {
                if self.delta_last > 0.0 {
                    (self.delta_last / 3.0).max(1e-20)
                } else {
                    1e-4
                }
            } else if self.delta_last == 0.0 {
                delta * 100.0
            } else {
                delta * 8.0
            };
            if delta > 1e40 {
                break;
            }
        }
        false
    }

    /// Solves the factored system with iterative refinement.
    fn solve(&self, rx: &[f64], ry: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let fac = self.fac.as_ref().expect("factor before solve");
        let nk = self.lay.nk;
        let mut rhs = vec![0.0; nk];
        for (j, &p) in self.lay.pos_var.iter().enumerate() {
            rhs[p] = rx[j];
        }
        for (r, &p) in self.lay.pos_eq.iter().enumerate() {
            rhs[p] = ry[r];
        }
        let scale = 1.0 + inf_norm(&rhs);
        let mut x = rhs.clone();
        fac.solve(&mut x);
        let mut res = vec![0.0; nk];
        let mut best = f64::INFINITY;
        for _ in 0..6 {
            self.kkt.mul(&x, &mut res);
            for (r, b) in res.iter_mut().zip(&rhs) {
                *r = b - *r;
            }
            let norm = inf_norm(&res);
            if norm <= 1e-15 * scale || norm >= 0.5 * best {
                break;
            }
            best = norm;
            fac.solve(&mut res);
            for (xi, d) in x.iter_mut().zip(&res) {
                *xi += d;
            }
        }
        let dz = self.lay.pos_var.iter().map(|&p| x[p]).collect();
        let dy = self.lay.pos_eq.iter().map(|&p| x[p]).collect();
        (dz, dy)
    }
}

/// General rows followed by one row per finite lower and upper bound.
fn inequality_rows(
    red: &Reduced,
) -> (
    SparseRows,
    Vec<f64>,
    Vec<(usize, usize)>,
    Vec<(usize, usize)>,
) {
    let mut g = red.g.clone();
    let mut h = red.h.clone();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for j in 0..red.n {
        if red.lb[j].is_finite() {
            lower.push((j, g.push(&[(j, -1.0)])));
            h.push(-red.lb[j]);
        }
    }
    for j in 0..red.n {
        if red.ub[j].is_finite() {
            upper.push((j, g.push(&[(j, 1.0)])));
            h.push(red.ub[j]);
        }
    }
    (g, h, lower, upper)
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(1.0f64, f64::min)
}

pub(crate) fn run(red: &Reduced, opts: &QpOptions) -> IpmResult {
    let n = red.n;
    let m = red.b.len();
    let (g, h, lower_rows, upper_rows) = inequality_rows(red);
    let p = h.len();
    let mut nw = Newton::new(red, &g, *opts);

    let finish = |status, z: Vec<f64>, y: Vec<f64>, lam: Vec<f64>, iterations| {
        let mut nu_lower = vec![0.0; n];
        let mut nu_upper = vec![0.0; n];
        for &(j, r) in &lower_rows {
            nu_lower[j] = lam[r];
        }
        for &(j, r) in &upper_rows {
            nu_upper[j] = lam[r];
        }
        IpmResult {
            status,
            z,
            y,
            lambda: lam[..red.h.len()].to_vec(),
            nu_lower,
            nu_upper,
            iterations,
        }
    };

    let cn = 1.0 + inf_norm(&red.c);
    let bn = 1.0 + inf_norm(&red.b);
    let hn = 1.0 + inf_norm(&h);

    // Starting point: equality-feasible minimizer of a proximal model.
    if !nw.factor(&vec![1.0; p]) {
        return finish(
            Outcome::Stalled,
            vec![0.0; n],
            vec![0.0; m],
            vec![0.0; p],
            0,
        );
    }
    let neg_c: Vec<f64> = red.c.iter().map(|v| -v).collect();
    let (mut z, mut y) = nw.solve(&neg_c, &red.b);
    let mut gz = vec![0.0; p];
    g.mul(&z, &mut gz);
    let mut s: Vec<f64> = (0..p).map(|i| (h[i] - gz[i]).max(1.0)).collect();
    let mut lam = vec![1.0; p];

    let mut rd = vec![0.0; n];
    let mut rp = vec![0.0; m];
    let mut ri = vec![0.0; p];
    let mut hz = vec![0.0; n];
    let mut history: Vec<f64> = Vec::new();
    let mut tiny_steps = 0;

    for iter in 0..=opts.max_iter {
        hz.iter_mut().for_each(|v| *v = 0.0);
        hess_mul_acc(&red.hess, &z, &mut hz);
        for j in 0..n {
            rd[j] = hz[j] + red.c[j];
        }
        red.a.mul_t_acc(&y, &mut rd);
        g.mul_t_acc(&lam, &mut rd);
        red.a.mul(&z, &mut rp);
        for (r, b) in rp.iter_mut().zip(&red.b) {
            *r -= b;
        }
        g.mul(&z, &mut gz);
        for i in 0..p {
            ri[i] = gz[i] + s[i] - h[i];
        }
        let comp: f64 = s.iter().zip(&lam).map(|(a, b)| a * b).sum();
        let mu = if p > 0 { comp / p as f64 } else { 0.0 };
        let comp_max = s
            .iter()
            .zip(&lam)
            .fold(0.0f64, |acc, (a, b)| acc.max(a * b));
        let obj: f64 = z
            .iter()
            .zip(&hz)
            .zip(&red.c)
            .map(|((zi, hzi), ci)| 0.5 * zi * hzi + ci * zi)
            .sum();
        let pinf = (inf_norm(&rp) / bn).max(inf_norm(&ri) / hn);
        let dinf = inf_norm(&rd) / cn;
        // Complementarity is driven further than the reported tolerance:
        // near-active rows otherwise leave a visible error in the primal.
        if pinf <= opts.tol && dinf <= opts.tol && comp_max <= 1e-4 * opts.tol * (1.0 + obj.abs()) {
            return finish(Outcome::Converged, z, y, lam, iter);
        }
        history.push(pinf);
        let diverging = inf_norm(&z) > 1e15 || inf_norm(&lam) > 1e15;
        let no_progress = iter >= 60 && pinf > 1e2 * opts.tol && pinf > 0.9 * history[iter - 30];
        if iter == opts.max_iter || diverging || no_progress || tiny_steps >= 5 {
            return finish(Outcome::Stalled, z, y, lam, iter);
        }

        let sigma_diag: Vec<f64> = lam.iter().zip(&s).map(|(l, s)| l / s).collect();
        if !nw.factor(&sigma_diag) {
            return finish(Outcome::Stalled, z, y, lam, iter);
        }

        let direction = |rc: &[f64]| {
            let w: Vec<f64> = (0..p).map(|i| (lam[i] * ri[i] - rc[i]) / s[i]).collect();
            let mut rx: Vec<f64> = rd.iter().map(|v| -v).collect();
            let mut gtw = vec![0.0; n];
            g.mul_t_acc(&w, &mut gtw);
            for j in 0..n {
                rx[j] -= gtw[j];
            }
            let ry: Vec<f64> = rp.iter().map(|v| -v).collect();
            let (dz, dy) = nw.solve(&rx, &ry);
            let mut gdz = vec![0.0; p];
            g.mul(&dz, &mut gdz);
            let ds: Vec<f64> = (0..p).map(|i| -ri[i] - gdz[i]).collect();
            let dl: Vec<f64> = (0..p).map(|i| (-rc[i] - lam[i] * ds[i]) / s[i]).collect();
            (dz, dy, ds, dl)
        };

        let rc_aff: Vec<f64> = s.iter().zip(&lam).map(|(a, b)| a * b).collect();
        let (_, _, ds_a, dl_a) = direction(&rc_aff);
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&lam, &dl_a));
        let sigma = if p > 0 && mu > 0.0 {
            let mu_aff: f64 = (0..p)
                .map(|i| (s[i] + alpha_aff * ds_a[i]) * (lam[i] + alpha_aff * dl_a[i]))
                .sum::<f64>()
                / p as f64;
            (mu_aff / mu).powi(3).min(1.0)
        } else {
            0.0
        };
        let rc: Vec<f64> = (0..p)
            .map(|i| s[i] * lam[i] + ds_a[i] * dl_a[i] - sigma * mu)
            .collect();
        let (dz, dy, ds, dl) = direction(&rc);
        let alpha = (0.995 * max_step(&s, &ds).min(max_step(&lam, &dl))).min(1.0);
        tiny_steps = if alpha < 1e-10 { tiny_steps + 1 } else { 0 };
        for j in 0..n {
            z[j] += alpha * dz[j];
        }
        for r in 0..m {
            y[r] += alpha * dy[r];
        }
        for i in 0..p {
            s[i] = (s[i] + alpha * ds[i]).max(1e-300);
            lam[i] = (lam[i] + alpha * dl[i]).max(1e-300);
        }
    }
    unreachable!("loop returns at max_iter")
}

/// Minimum total constraint violation `Σ elastics`, keeping variable bounds
/// hard. Zero (to tolerance) iff the problem is feasible.
pub(crate) fn elastic_violation(red: &Reduced, opts: &QpOptions) -> f64 {
    let n = red.n;
    let m = red.b.len();
    let pg = red.h.len();
    let ne = n + 2 * m + pg;
    let row_stage =
        |row: &[(usize, f64)]| row.iter().map(|&(j, _)| red.stage[j]).min().unwrap_or(0);
    let mut stage = red.stage.clone();
    stage.resize(ne, 0);
    let mut a = SparseRows::new(ne);
    for (r, row) in red.a.rows().iter().enumerate() {
        let mut e = row.clone();
        e.push((n + r, 1.0));
        e.push((n + m + r, -1.0));
        a.push(&e);
        stage[n + r] = row_stage(row);
        stage[n + m + r] = row_stage(row);
    }
    let mut g = SparseRows::new(ne);
    for (r, row) in red.g.rows().iter().enumerate() {
        let mut e = row.clone();
        e.push((n + 2 * m + r, -1.0));
        g.push(&e);
        stage[n + 2 * m + r] = row_stage(row);
    }
    let mut c = vec![0.0; ne];
    c[n..].iter_mut().for_each(|v| *v = 1.0);
    let mut lb = red.lb.clone();
    lb.resize(ne, 0.0);
    let mut ub = red.ub.clone();
    ub.resize(ne, f64::INFINITY);
    let elastic = Reduced {
        n: ne,
        hess: (0..n).map(|j| (j, j, 1e-8)).collect(),
        c,
        a,
        b: red.b.clone(),
        g,
        h: red.h.clone(),
        lb,
        ub,
        stage,
    };
    let res = run(
        &elastic,
        &QpOptions {
            phase_one: false,
            ..*opts
        },
    );
    res.z[n..].iter().map(|v| v.max(0.0)).sum()
}
