use super::*;

fn opts() -> QpOptions {
    QpOptions::default()
}

#[test]
fn scalar_lower_bound() {
    let mut qp = QpProblem::new(1);
    qp.add_hessian(0, 0, 1.0);
    qp.set_bounds(0, 1.0, f64::INFINITY);
    let sol = solve(&qp, &opts());
    assert_eq!(sol.status, QpStatus::Optimal);
    assert!((sol.z[0] - 1.0).abs() < 1e-8);
    assert!((sol.nu_lower[0] - 1.0).abs() < 1e-7);
}

#[test]
fn scalar_lower_bound_as_row() {
    // Two-variable row so presolve keeps it for the interior-point solve.
    let mut qp = QpProblem::new(2);
    qp.add_hessian(0, 0, 1.0);
    qp.add_hessian(1, 1, 1.0);
    qp.add_ineq(&[(0, -1.0), (1, -1.0)], -2.0);
    let sol = solve(&qp, &opts());
    assert_eq!(sol.status, QpStatus::Optimal);
    assert!((sol.z[0] - 1.0).abs() < 1e-8 && (sol.z[1] - 1.0).abs() < 1e-8);
    assert!((sol.lambda[0] - 1.0).abs() < 1e-7);
    assert!(sol.residuals.max() < 1e-8);
}

#[test]
fn singleton_row_dual_is_recovered() {
    let mut qp = QpProblem::new(1);
    qp.add_hessian(0, 0, 1.0);
    qp.add_ineq(&[(0, -2.0)], -2.0);
    let sol = solve(&qp, &opts());
    assert_eq!(sol.status, QpStatus::Optimal);
    assert!((sol.z[0] - 1.0).abs() < 1e-8);
    assert!((sol.lambda[0] - 0.5).abs() < 1e-7);
    assert_eq!(sol.nu_lower[0], 0.0);
}

#[test]
fn equality_constrained_projection() {
    let mut qp = QpProblem::new(2);
    qp.add_hessian(0, 0, 1.0);
    qp.add_hessian(1, 1, 1.0);
    qp.add_eq(&[(0, 1.0), (1, 1.0)], 1.0);
    let sol = solve(&qp, &opts());
    assert_eq!(sol.status, QpStatus::Optimal);
    assert!((sol.z[0] - 0.5).abs() < 1e-9 && (sol.z[1] - 0.5).abs() < 1e-9);
    assert!((sol.y[0] + 0.5).abs() < 1e-9);
}

#[test]
fn fixed_variables_are_eliminated() {
    // z0 = 2 by a singleton row; minimize (z1 − z0)² + z1².
    let mut qp = QpProblem::new(2);
    qp.add_eq(&[(0, 1.0)], 2.0);
    qp.add_hessian(0, 0, 2.0);
    qp.add_hessian(1, 1, 4.0);
    qp.add_hessian(0, 1, -2.0);
    let sol = solve(&qp, &opts());
    assert_eq!(sol.status, QpStatus::Optimal);
    assert!((sol.z[0] - 2.0).abs() < 1e-12);
    assert!((sol.z[1] - 1.0).abs() < 1e-9);
    assert!(sol.residuals.max() < 1e-8, "{:?}", sol.residuals);
}

#[test]
fn conflicting_bounds_are_infeasible() {
    let mut qp = QpProblem::new(2);
    qp.add_eq(&[(0, 1.0)], 3.0);
    qp.set_bounds(0, 0.0, 2.0);
    assert_eq!(solve(&qp, &opts()).status, QpStatus::Infeasible);
}

#[test]
fn conflicting_rows_are_infeasible() {
    let mut qp = QpProblem::new(2);
    qp.add_hessian(0, 0, 1.0);
    qp.add_hessian(1, 1, 1.0);
    qp.add_ineq(&[(0, -1.0), (1, -1.0)], -1.0);
    qp.add_ineq(&[(0, 1.0), (1, 1.0)], 0.0);
    let sol = solve(&qp, &opts());
    assert_eq!(sol.status, QpStatus::Infeasible);
    assert!(sol.infeasibility.unwrap() > 0.5);
}

#[test]
fn dynamics_infeasibility_needs_phase_one() {
    // x_{k+1} = x_k + u_k, x_0 = 0, |u| ≤ 1, x_5 ≥ 6.
    let n = 11;
    let mut qp = QpProblem::new(n);
    let x = |k: usize| 2 * k;
    let u = |k: usize| 2 * k + 1;
    qp.add_eq(&[(x(0), 1.0)], 0.0);
    for k in 0..5 {
        qp.add_eq(&[(x(k + 1), 1.0), (x(k), -1.0), (u(k), -1.0)], 0.0);
        qp.set_bounds(u(k), -1.0, 1.0);
        qp.add_hessian(u(k), u(k), 1.0);
    }
    qp.add_ineq(&[(x(5), -1.0), (x(4), 0.0)], -6.0);
    qp.add_ineq(&[(x(5), -1.0), (x(3), -1e-9)], -6.0);
    qp.set_stages((0..n).map(|j| j / 2).collect());
    let sol = solve(&qp, &opts());
    assert_eq!(sol.status, QpStatus::Infeasible);
}

#[test]
fn indefinite_hessian_with_bounds() {
    // min −z² on [−1, 2]: the interior-point method reaches a KKT point.
    let mut qp = QpProblem::new(2);
    qp.add_hessian(0, 0, -2.0);
    qp.add_hessian(1, 1, 1.0);
    qp.add_hessian(0, 1, 0.1);
    qp.set_bounds(0, -1.0, 2.0);
    qp.set_bounds(1, -1.0, 1.0);
    qp.add_linear(0, -0.5);
    let sol = solve(&qp, &opts());
    assert_eq!(sol.status, QpStatus::Optimal);
    assert!(sol.residuals.max() < 1e-8, "{:?}", sol.residuals);
}

#[test]
fn banded_stage_ordering_matches_unstaged() {
    let n = 3 * 40;
    let build = |staged: bool| {
        let mut qp = QpProblem::new(n);
        for k in 0..40 {
            let (x, v, u) = (3 * k, 3 * k + 1, 3 * k + 2);
            qp.add_hessian(x, x, 1.0);
            qp.add_hessian(u, u, 0.1);
            qp.set_bounds(u, -0.3, 0.3);
            if k == 0 {
                qp.add_eq(&[(x, 1.0), (v, 0.5)], 0.5);
                qp.add_eq(&[(v, 1.0), (x, 0.2)], 0.0);
            } else {
                let (xp, vp, up) = (x - 3, v - 3, u - 3);
                qp.add_eq(&[(x, 1.0), (xp, -1.0), (vp, -0.1)], 0.0);
                qp.add_eq(&[(v, 1.0), (vp, -1.0), (up, -0.1), (xp, 0.02)], 0.0);
            }
            qp.add_ineq(&[(x, 1.0), (v, 0.3)], 0.9);
        }
        if staged {
            qp.set_stages((0..n).map(|j| j / 3).collect());
        }
        qp
    };
    let a = solve(&build(true), &opts());
    let b = solve(&build(false), &opts());
    assert_eq!(a.status, QpStatus::Optimal);
    assert_eq!(b.status, QpStatus::Optimal);
    for (x, y) in a.z.iter().zip(&b.z) {
        assert!((x - y).abs() < 1e-7);
    }
    assert!(a.residuals.max() < 1e-8);
}

#[test]
fn sparse_rows_merge_duplicates() {
    let mut m = SparseRows::new(3);
    m.push(&[(2, 1.0), (0, 1.0), (2, 2.0), (1, 0.0)]);
    assert_eq!(m.row(0), &[(0, 1.0), (2, 3.0)]);
    let mut y = [0.0; 3];
    m.mul_t_acc(&[2.0], &mut y);
    assert_eq!(y, [2.0, 0.0, 6.0]);
}
