mod common;

use fowt_ccd::qp::{solve, QpOptions, QpStatus};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interior_point_matches_enumeration(
        seed in any::<u64>(),
        n in 2usize..=30,
        m in 0usize..=4,
        p in 1usize..=15,
    ) {
        let m = m.min(n - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = common::random_qp(&mut rng, n, m, p);
        let (z_ref, lam_ref) = dense.enumerate().expect("feasible instance");
        let sol = solve(&dense.to_problem(), &QpOptions::default());
        prop_assert_eq!(sol.status, QpStatus::Optimal);
        let scale = 1.0 + z_ref.amax();
        for (a, b) in sol.z.iter().zip(z_ref.iter()) {
            prop_assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
        }
        // Multipliers are unique only when the active rows are independent.
        let slack = &dense.hv - &dense.g * &z_ref;
        let active = slack.iter().filter(|s| s.abs() < 1e-7).count();
        if active + m <= n {
            for (a, b) in sol.lambda.iter().zip(lam_ref.iter()) {
                prop_assert!((a - b).abs() <= 1e-5 * (1.0 + b.abs()), "λ {a} vs {b}");
            }
        }
        prop_assert!(sol.residuals.max() < 1e-8, "{:?}", sol.residuals);
    }
}

#[test]
fn oracle_recovers_known_solution() {
    // min ½‖z‖² − z₀ s.t. z₀ ≤ 0.5: z = (0.5, 0), λ = 0.5.
    use nalgebra::{DMatrix, DVector};
    let q = common::DenseQp {
        h: DMatrix::identity(2, 2),
        c: DVector::from_vec(vec![-1.0, 0.0]),
        a: DMatrix::zeros(0, 2),
        b: DVector::zeros(0),
        g: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        hv: DVector::from_vec(vec![0.5]),
    };
    let (z, lam) = q.enumerate().unwrap();
    assert!((z[0] - 0.5).abs() < 1e-14 && z[1].abs() < 1e-14);
    assert!((lam[0] - 0.5).abs() < 1e-14);
}
