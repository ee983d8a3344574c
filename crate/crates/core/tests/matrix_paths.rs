mod common;

use conjscan::matrix_lab::{
    find_crossings, verify_isolation_bound, verify_morse_jump, MatrixPath, DEFAULT_KERNEL_TOL, DEFAULT_SAMPLES,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[test]
fn random_path_crossings_match_eigen_branches() {
    for seed in [3, 11, 2024] {
        let path = MatrixPath::random(seed, 8).unwrap();
        let crossings = find_crossings(&path, DEFAULT_SAMPLES, DEFAULT_KERNEL_TOL).unwrap();
        let oracle = common::eigen_branch_crossings(|l| rows(&path.at(l)), 0.0, 1.0, 10_000);
        assert_eq!(crossings.len(), oracle.len(), "seed {seed}");
        for (c, (mid, dneg)) in crossings.iter().zip(&oracle) {
            assert!((c.lambda0 - mid).abs() <= 1e-4, "seed {seed}: {} vs {mid}", c.lambda0);
            assert!(c.regular);
            assert_eq!(c.signature, -dneg, "seed {seed} at {mid}");
        }
    }
}

#[test]
fn closed_form_paths() {
    let p = MatrixPath::diagonal(vec![(|l| l - 0.5, |_| 1.0), (|_| 1.0, |_| 0.0)], "diag(l-0.5, 1)").unwrap();
    let jump = verify_morse_jump(&p, 0.0, 1.0).unwrap();
    assert_eq!((jump.lhs, jump.rhs, jump.crossings.len()), (1, 1, 1));
    assert!((jump.crossings[0].lambda0 - 0.5).abs() < 1e-12);
    let iso = verify_isolation_bound(&p, 0.5).unwrap();
    assert!(iso.holds && (iso.c - 1.0).abs() < 1e-6 && iso.epsilon == 0.1);

    let q = MatrixPath::diagonal(vec![(|l| l - 0.3, |_| 1.0), (|l| 0.7 - l, |_| -1.0)], "diag(l-0.3, 0.7-l)").unwrap();
    let jump = verify_morse_jump(&q, 0.0, 1.0).unwrap();
    let sig: Vec<i64> = jump.crossings.iter().map(|c| c.signature).collect();
    assert_eq!(sig, vec![1, -1]);
    assert_eq!((jump.lhs, jump.rhs), (0, 0));

    let t = MatrixPath::diagonal(vec![(|l| (l - 0.5).powi(2), |l| 2.0 * (l - 0.5)), (|_| 1.0, |_| 0.0)], "tangent")
        .unwrap();
    assert_eq!(verify_isolation_bound(&t, 0.5).unwrap_err().code(), "ISOLATION_UNVERIFIED");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_paths_satisfy_jump_formula(seed in 0u64..1_000_000, d in prop::sample::select(vec![4usize, 8, 16])) {
        let path = MatrixPath::random(seed, d).unwrap();
        prop_assert!(path.check_consistency().is_ok());
        let jump = verify_morse_jump(&path, 0.0, 1.0).unwrap();
        prop_assert!(jump.holds, "lhs {} rhs {}", jump.lhs, jump.rhs);
        for c in &jump.crossings {
            let m = c.kernel_dim() as i64;
            prop_assert!(c.signature.abs() <= m && (c.signature - m) % 2 == 0);
            let iso = verify_isolation_bound(&path, c.lambda0).unwrap();
            prop_assert!(iso.holds && iso.c > 0.0);
        }
    }

    #[test]
    fn jump_formula_is_additive(seed in 0u64..1_000_000, split in 0.2f64..0.8) {
        let path = MatrixPath::random(seed, 6).unwrap();
        // skip splits that land on a crossing
        prop_assume!(conjscan::matrix_lab::sigma_min(&path.at(split)) > 1e-6);
        let whole = verify_morse_jump(&path, 0.0, 1.0).unwrap();
        let left = verify_morse_jump(&path, 0.0, split).unwrap();
        let right = verify_morse_jump(&path, split, 1.0).unwrap();
        prop_assert_eq!(whole.lhs, left.lhs + right.lhs);
        prop_assert_eq!(whole.rhs, left.rhs + right.rhs);
    }
}
