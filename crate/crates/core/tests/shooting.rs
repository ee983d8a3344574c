mod common;

use conjscan::assembly::Grid;
use conjscan::problem::Nonlinearity;
use conjscan::scan::{verify_smale_identity, ScanOptions, ScanReport};
use conjscan::shooting::{branch_radius, shoot, shooting_zeros, verify_bifurcation_theorem, DEFAULT_S_SCHEDULE};
use conjscan::{demos, CoefficientField, Interval1DProblem, Problem};

fn problem(a: &str, g: &str, alpha: f64) -> Interval1DProblem {
    Interval1DProblem::with_nonlinearity(CoefficientField::parse(a).unwrap(), Nonlinearity::parse(g, alpha).unwrap())
}

fn scan(p: &Interval1DProblem) -> ScanReport {
    verify_smale_identity(&Problem::from(p.clone()), &Grid::new(2001).unwrap(), &ScanOptions::default()).unwrap()
}

#[test]
fn trivial_branch_is_preserved() {
    let p = problem("1 + 0.2*x", "-(2.5*pi)^2*xi + xi^3", 3.0);
    for i in 1..=20 {
        let st = shoot(&p, i as f64 / 20.0, 0.0).unwrap();
        assert_eq!((st.u, st.du, st.amplitude), (0.0, 0.0, 0.0));
    }
}

#[test]
fn linear_radii_are_slope_independent_and_match_scan() {
    let p = problem("1", "-(2.5*pi)^2*xi", 1.0);
    let rep = scan(&p);
    let base = shooting_zeros(&p, 1.0).unwrap();
    assert_eq!(base.len(), rep.crossings.len());
    for s in [1e-2, 1e-4, -1e-3] {
        let z = shooting_zeros(&p, s).unwrap();
        assert_eq!(z.len(), base.len());
        for (a, b) in z.iter().zip(&base) {
            assert!((a.r - b.r).abs() < 1e-9, "s = {s}: {} vs {}", a.r, b.r);
        }
    }
    for (z, c) in base.iter().zip(&rep.crossings) {
        assert!((z.r - c.r0).abs() < 1e-6);
    }
}

#[test]
fn linear_variable_coefficients_match_oscillation_oracle() {
    let p = problem("1 + 0.3*sin(2*x)", "(-120 + 25*cos(3*x))*xi", 1.0);
    let zeros = common::oscillation_zeros(|x| 1.0 + 0.3 * (2.0 * x).sin(), |x| -120.0 + 25.0 * (3.0 * x).cos(), 40_000);
    let shot = shooting_zeros(&p, 1.0).unwrap();
    assert_eq!(shot.len(), zeros.len());
    for (s, z) in shot.iter().zip(&zeros) {
        assert!((s.r - z).abs() < 1e-7, "{} vs {z}", s.r);
    }
}

#[test]
fn cubic_demo_converges_to_instants() {
    let p = match demos::cubic() {
        Problem::Interval(p) => p,
        _ => unreachable!(),
    };
    let rep = scan(&p);
    let bif = verify_bifurcation_theorem(&p, &rep, &DEFAULT_S_SCHEDULE).unwrap();
    bif.check().unwrap();
    assert_eq!(bif.distinct_limits, rep.morse_index_at_1);
    assert!(bif.count_matches && bif.all_instants_matched);
    for l in &bif.limits {
        assert!(l.monotone && l.amplitudes_decreasing, "{l:?}");
    }
    for (k, r0) in [(1, 0.4), (2, 0.8)] {
        let track: Vec<f64> = bif.points.iter().filter(|b| b.k == k).map(|b| (b.r - r0).abs()).collect();
        assert_eq!(track.len(), 3);
        assert!(track.windows(2).all(|w| w[1] <= w[0]));
        assert!(track[2] <= 1e-3);
    }
    let first = branch_radius(&p, 1e-3).unwrap().unwrap();
    assert!((first - 0.4).abs() <= 1e-3);
}

#[test]
fn quadratic_term_keeps_the_radii() {
    let p = problem("1", "-(2.5*pi)^2*xi + xi^2", 2.0);
    let rep = scan(&p);
    let bif = verify_bifurcation_theorem(&p, &rep, &DEFAULT_S_SCHEDULE).unwrap();
    bif.check().unwrap();
    let limits: Vec<f64> = bif.limits.iter().map(|l| l.limit).collect();
    assert_eq!(limits.len(), 2);
    assert!((limits[0] - 0.4).abs() < 1e-5 && (limits[1] - 0.8).abs() < 1e-5, "{limits:?}");
}

#[test]
fn positive_problem_never_bifurcates() {
    let p = problem("1", "xi^3", 3.0);
    let rep = scan(&p);
    assert!(rep.crossings.is_empty());
    let bif = verify_bifurcation_theorem(&p, &rep, &DEFAULT_S_SCHEDULE).unwrap();
    assert!(bif.points.is_empty() && bif.limits.is_empty());
    assert_eq!((bif.distinct_limits, bif.morse_index), (0, 0));
    assert_eq!(branch_radius(&p, 1e-2).unwrap(), None);
}

#[test]
fn shooting_is_deterministic() {
    let p = problem("1", "-(2.5*pi)^2*xi + xi^3", 3.0);
    assert_eq!(shooting_zeros(&p, 1e-3).unwrap(), shooting_zeros(&p, 1e-3).unwrap());
}
