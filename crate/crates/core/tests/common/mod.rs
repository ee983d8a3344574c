//! Independent reference computations. Nothing here calls into the library's
//! numerical code.
#![allow(dead_code)]

/// Γ(order + 1) for integer or half-integer order.
fn gamma_plus_one(order: f64) -> f64 {
    let mut x = order + 1.0;
    let mut acc = 1.0;
    while x > 1.5 {
        x -= 1.0;
        acc *= x;
    }
    if (x - 1.0).abs() < 1e-12 {
        acc
    } else {
        // x = 1/2
        acc * std::f64::consts::PI.sqrt()
    }
}

/// Bessel function of the first kind from its power series.
pub fn bessel_j(order: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = (0.5 * x).powf(order) / gamma_plus_one(order);
    let mut sum = term;
    for m in 1..200 {
        let m = m as f64;
        term *= -q / (m * (m + order));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && m > q.sqrt() {
            break;
        }
    }
    sum
}

/// The k-th positive zero of J_order, by a scan for sign changes and bisection.
pub fn bessel_zero(order: f64, k: usize) -> f64 {
    let step = 1e-2;
    let mut x = step;
    let mut found = 0;
    let mut prev = bessel_j(order, x);
    loop {
        let next = bessel_j(order, x + step);
        if prev.signum() != next.signum() {
            found += 1;
            if found == k {
                let (mut lo, mut hi) = (x, x + step);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if bessel_j(order, mid).signum() == bessel_j(order, lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        prev = next;
        x += step;
        assert!(x < 100.0, "zero search ran away");
    }
}

/// Zeros of radial mode `nu` on the unit n-ball for a ≡ a0, f ≡ −c: the
/// radial factor is ρ^{1−n/2} J_{ν+n/2−1}(√(c/a0) ρ).
pub fn radial_instants(dimension: usize, nu: usize, a0: f64, c: f64) -> Vec<f64> {
    let order = nu as f64 + 0.5 * dimension as f64 - 1.0;
    let k = (c / a0).sqrt();
    (1..).map(|j| bessel_zero(order, j) / k).take_while(|r| *r < 1.0).collect()
}

/// Zeros in (0, 1) of the solution of −(a u′)′ + f u = 0, u(0) = 0,
/// a u′(0) = 1, by fixed-step RK4 on (u, a u′) with linear interpolation
/// at sign changes.
pub fn oscillation_zeros(a: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64, steps: usize) -> Vec<f64> {
    let h = 1.0 / steps as f64;
    let rhs = |x: f64, y: [f64; 2]| [y[1] / a(x), f(x) * y[0]];
    let mut y = [0.0, 1.0];
    let mut zeros = Vec::new();
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = rhs(x, y);
        let k2 = rhs(x + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(x + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        let next = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if i > 0 && y[0] != 0.0 && next[0].signum() != y[0].signum() && i + 1 < steps {
            zeros.push(x + h * y[0] / (y[0] - next[0]));
        }
        y = next;
    }
    zeros
}

/// Max-entry distance between two dense matrices given as rows.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max)
}

/// Sorted eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Crossings of a symmetric matrix path on [lo, hi] found by tracking the
/// sign pattern of its eigenvalue branches at `samples` points. Each entry
/// is (midpoint of the bracketing interval, change in negative count).
pub fn eigen_branch_crossings(
    path: impl Fn(f64) -> Vec<Vec<f64>> + Sync,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Vec<(f64, i64)> {
    use rayon::prelude::*;
    let grid: Vec<f64> = (0..=samples).map(|i| lo + (hi - lo) * i as f64 / samples as f64).collect();
    let neg: Vec<i64> =
        grid.par_iter().map(|&l| jacobi_eigenvalues(path(l)).iter().filter(|v| **v < 0.0).count() as i64).collect();
    let mut out = Vec::new();
    for i in 0..samples {
        if neg[i + 1] != neg[i] {
            out.push((0.5 * (grid[i] + grid[i + 1]), neg[i + 1] - neg[i]));
        }
    }
    out
}
