mod common;

use std::f64::consts::PI;

use conjscan::assembly::Grid;
use conjscan::crossing::{certify_conjugate_instant, CrossingReport};
use conjscan::inertia::DEFAULT_KERNEL_TAU;
use conjscan::problem::AngularMode;
use conjscan::scan::{build_scan_report, scan_conjugate_instants, verify_smale_identity, ScanOptions, ScanReport};
use conjscan::{demos, CoefficientField, Interval1DProblem, Problem};

fn report(problem: &Problem, n: usize, opts: &ScanOptions) -> ScanReport {
    let grid = Grid::new(n).unwrap();
    let scan = scan_conjugate_instants(problem, &grid, opts).unwrap();
    build_scan_report(problem, &grid, &scan, opts).unwrap()
}

fn rel_frobenius(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let diff: f64 = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = a.iter().flatten().map(|x| x * x).sum();
    (diff / norm).sqrt()
}

fn max_form_disagreement(c: &CrossingReport) -> f64 {
    c.modes.iter().map(|m| rel_frobenius(&m.gamma_derivative, &m.gamma_boundary)).fold(0.0, f64::max)
}

#[test]
fn interval_forms_match_closed_form() {
    let grid = Grid::new(2001).unwrap();
    let c = (2.5 * PI).powi(2);
    for r0 in [0.4, 0.8] {
        let rep = certify_conjugate_instant(&demos::interval(), &[None], r0, &grid, 1e-6, 1e-6).unwrap();
        assert_eq!((rep.multiplicity, rep.signature), (1, -1));
        assert!(rep.regular && rep.negative_definite);
        // K̇ = −2 r c M on M-normalized kernel vectors
        let exact = -2.0 * r0 * c;
        let der = rep.modes[0].gamma_derivative[0][0];
        let bdy = rep.modes[0].gamma_boundary[0][0];
        assert!((der / exact - 1.0).abs() < 1e-3, "{der} vs {exact}");
        assert!((bdy / der - 1.0).abs() < 1e-3, "{bdy} vs {der}");
    }
}

#[test]
fn disk_mode_one_crossing() {
    let grid = Grid::new(2001).unwrap();
    let r0 = common::bessel_zero(1.0, 1) / 30f64.sqrt();
    let modes = [Some(AngularMode::new(1, 2))];
    let rep = certify_conjugate_instant(&demos::radial(), &modes, r0, &grid, 1e-6, 1e-6).unwrap();
    assert_eq!((rep.multiplicity, rep.signature), (2, -2));
    assert!(rep.negative_definite && rep.regular);
    assert_eq!(rep.modes[0].kernel_dim, 1);
    assert!(rep.modes[0].gamma_boundary[0][0] < 0.0);
}

#[test]
fn demo_forms_agree() {
    for (name, text) in demos::ALL {
        let cfg = demos::config(text);
        let rep = report(&cfg.problem, 2001, &ScanOptions::default());
        assert!(!rep.crossings.is_empty(), "{name}");
        for c in &rep.crossings {
            let d = max_form_disagreement(c);
            assert!(d < 1e-3, "{name} at {}: {d}", c.r0);
            assert!(c.negative_definite && c.signature_matches());
        }
    }
}

#[test]
fn form_disagreement_shrinks_with_mesh() {
    for problem in [demos::interval(), demos::radial()] {
        let d: Vec<Vec<f64>> = [501, 1001, 2001]
            .iter()
            .map(|&n| {
                report(&problem, n, &ScanOptions::default()).crossings.iter().map(max_form_disagreement).collect()
            })
            .collect();
        for w in d.windows(2) {
            assert_eq!(w[0].len(), w[1].len());
            for (coarse, fine) in w[0].iter().zip(&w[1]) {
                assert!(fine / coarse <= 0.5, "{coarse} -> {fine}");
            }
        }
    }
}

#[test]
fn zero_potential_has_no_crossings() {
    let p: Problem = Interval1DProblem::new(CoefficientField::constant(1.0), CoefficientField::constant(0.0)).into();
    let rep = verify_smale_identity(&p, &Grid::new(501).unwrap(), &ScanOptions::default()).unwrap();
    assert!(rep.crossings.is_empty());
    assert_eq!((rep.smale_lhs, rep.smale_rhs, rep.bifurcation_lower_bound), (0, 0, 0));
    let grid = Grid::new(501).unwrap();
    for r in [0.25, 0.5, 1.0] {
        let err = certify_conjugate_instant(&p, &[None], r, &grid, DEFAULT_KERNEL_TAU, 1e-6).unwrap_err();
        assert_eq!(err.code(), "NO_CROSSING");
    }
}

#[test]
fn interval_and_disk_instants() {
    let opts = ScanOptions::default();
    let rep = report(&demos::interval(), 2001, &opts);
    let pairs = rep.crossing_pairs();
    assert_eq!(pairs.len(), 2);
    for ((r, m), want) in pairs.iter().zip([0.4, 0.8]) {
        assert!((r - want).abs() < 1e-4 && *m == 1);
    }
    assert_eq!((rep.smale_lhs, rep.smale_rhs, rep.bifurcation_lower_bound), (2, 2, 2));

    let rep = report(&demos::radial(), 2001, &opts);
    let mut oracle: Vec<(f64, usize)> = (0..3)
        .flat_map(|nu| {
            common::radial_instants(2, nu, 1.0, 30.0).into_iter().map(move |r| (r, if nu == 0 { 1 } else { 2 }))
        })
        .collect();
    oracle.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pairs = rep.crossing_pairs();
    assert_eq!(pairs.len(), oracle.len());
    for ((r, m), (ro, mo)) in pairs.iter().zip(&oracle) {
        assert!((r - ro).abs() < 1e-3, "{r} vs {ro}");
        assert_eq!(m, mo);
    }
    assert_eq!((rep.smale_lhs, rep.smale_rhs, rep.bifurcation_lower_bound), (5, 5, 2));
    assert_eq!(rep.crossings.len(), 3);
}

#[test]
fn ball_instants_match_spherical_bessel_zeros() {
    let rep = report(&demos::yamabe(), 2001, &ScanOptions::default());
    let mut oracle: Vec<(f64, usize)> = (0..6)
        .flat_map(|nu| common::radial_instants(3, nu, 8.0, 300.0).into_iter().map(move |r| (r, 2 * nu + 1)))
        .collect();
    oracle.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pairs = rep.crossing_pairs();
    assert_eq!(pairs.len(), oracle.len());
    for ((r, m), (ro, mo)) in pairs.iter().zip(&oracle) {
        assert!((r - ro).abs() < 1e-4, "{r} vs {ro}");
        assert_eq!(m, mo);
    }
    assert!(rep.smale_holds);
    assert_eq!(rep.smale_lhs, oracle.iter().map(|p| p.1).sum::<usize>());
}

#[test]
fn variable_coefficients_match_oscillation_oracle() {
    let a = |x: f64| 1.0 + 0.3 * (2.0 * x).sin();
    let f = |x: f64| -120.0 + 25.0 * (3.0 * x).cos();
    let p: Problem = Interval1DProblem::new(
        CoefficientField::parse("1 + 0.3*sin(2*x)").unwrap(),
        CoefficientField::parse("-120 + 25*cos(3*x)").unwrap(),
    )
    .into();
    let zeros = common::oscillation_zeros(a, f, 40_000);
    let rep = report(&p, 2001, &ScanOptions::default());
    assert!(rep.smale_holds && rep.stepwise_holds);
    assert_eq!(rep.smale_rhs, zeros.len());
    for ((r, m), z) in rep.crossing_pairs().iter().zip(&zeros) {
        assert_eq!(*m, 1);
        assert!((r - z).abs() < 1e-5, "{r} vs {z}");
    }
}

#[test]
fn scan_is_deterministic() {
    let opts = ScanOptions::default();
    for p in [demos::interval(), demos::radial()] {
        assert_eq!(report(&p, 801, &opts), report(&p, 801, &opts));
    }
}

#[test]
fn halving_refine_tol_is_stable() {
    for p in [demos::interval(), demos::radial()] {
        let loose = ScanOptions { refine_tol: 1e-7, ..ScanOptions::default() };
        let tight = ScanOptions { refine_tol: 5e-8, ..ScanOptions::default() };
        let a = report(&p, 1001, &loose).crossing_pairs();
        let b = report(&p, 1001, &tight).crossing_pairs();
        assert_eq!(a.len(), b.len());
        for ((ra, ma), (rb, mb)) in a.iter().zip(&b) {
            assert_eq!(ma, mb);
            assert!((ra - rb).abs() < loose.refine_tol, "{ra} vs {rb}");
        }
    }
}

#[test]
fn mesh_doubling_moves_instants_by_h_squared() {
    for p in [demos::interval(), demos::radial(), demos::yamabe()] {
        let opts = ScanOptions::default();
        let coarse = report(&p, 1001, &opts).crossing_pairs();
        let fine = report(&p, 2001, &opts).crossing_pairs();
        assert_eq!(coarse.len(), fine.len());
        let h = 1.0 / 1000.0;
        let c = coarse
            .iter()
            .zip(&fine)
            .map(|((r1, m1), (r2, m2))| {
                assert_eq!(m1, m2);
                (r1 - r2).abs() / (h * h)
            })
            .fold(0.0, f64::max);
        println!("mesh constant C = {c:.3e}");
        assert!(c < 1.0, "C = {c}");
    }
}
