//! Morse indices, kernels and extremal eigenpairs of symmetric pencils,
//! all driven by exact inertia counts of `K - σM` (Sylvester's law).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::assembly::{assemble_operator, Grid, OperatorPencil};
use crate::banded::Inertia;
use crate::error::{Error, Result};
use crate::problem::{AngularMode, Problem};

/// Default relative threshold separating kernel eigenvalues from the rest.
pub const DEFAULT_KERNEL_TAU: f64 = 1e-8;
/// Largest angular degree the Morse-index mode extension may reach.
pub const MAX_MODE: usize = 256;
const MAX_INVERSE_ITERATIONS: usize = 200;

/// Inertia of `K - σM`. A breakdown is retried with σ nudged by 1e-12
/// relative, at most three times.
pub fn pencil_inertia(pencil: &OperatorPencil, sigma: f64) -> Result<Inertia> {
    let mut shift = sigma;
    for attempt in 0..4 {
        if attempt > 0 {
            shift = sigma + attempt as f64 * 1e-12 * sigma.abs().max(1.0);
        }
        if let Ok(f) = pencil.k.combine(1.0, &pencil.m, -shift).factor() {
            return Ok(f.inertia());
        }
    }
    Err(Error::InertiaBreakdown(sigma))
}

fn count_below(pencil: &OperatorPencil, sigma: f64) -> Result<usize> {
    Ok(pencil_inertia(pencil, sigma)?.n_neg)
}

/// Number of negative eigenvalues contributed by each analysed mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MorseProfile {
    pub total: usize,
    /// `(mode, unweighted negative count)`; `None` for the interval.
    pub per_mode: Vec<(Option<AngularMode>, usize)>,
}

impl MorseProfile {
    /// Modes with at least one negative eigenvalue.
    pub fn active_modes(&self) -> Vec<Option<AngularMode>> {
        self.per_mode.iter().filter(|(_, c)| *c > 0).map(|(m, _)| *m).collect()
    }
}

pub fn mode_negative_count(problem: &Problem, mode: Option<AngularMode>, r: f64, grid: &Grid) -> Result<usize> {
    count_below(&assemble_operator(problem, mode, r, grid)?, 0.0)
}

/// Morse index at radius r with its per-mode breakdown. Radial mode lists
/// are extended past their largest ν until two consecutive degrees
/// contribute nothing.
pub fn morse_profile(problem: &Problem, r: f64, grid: &Grid) -> Result<MorseProfile> {
    match problem {
        Problem::Interval(_) => {
            let c = mode_negative_count(problem, None, r, grid)?;
            Ok(MorseProfile { total: c, per_mode: vec![(None, c)] })
        }
        Problem::Radial(p) => {
            let listed: Vec<(Option<AngularMode>, usize)> = p
                .modes
                .par_iter()
                .map(|&m| Ok((Some(m), mode_negative_count(problem, Some(m), r, grid)?)))
                .collect::<Result<_>>()?;
            let mut per_mode = listed;
            let count_of = |nu: usize, list: &[(Option<AngularMode>, usize)]| {
                list.iter().find(|(m, _)| m.map(|m| m.nu) == Some(nu)).map(|(_, c)| *c)
            };
            let mut next = p.modes.last().map_or(0, |m| m.nu + 1);
            loop {
                let top = next.checked_sub(1);
                let done = match top {
                    Some(t) if t >= 1 => count_of(t, &per_mode) == Some(0) && count_of(t - 1, &per_mode) == Some(0),
                    _ => false,
                };
                if done {
                    break;
                }
                if next > MAX_MODE {
                    return Err(Error::ModeOverflow(next));
                }
                if count_of(next, &per_mode).is_none() {
                    let m = AngularMode::new(next, p.dimension);
                    per_mode.push((Some(m), mode_negative_count(problem, Some(m), r, grid)?));
                }
                // fill a gap below so the two-consecutive rule is well defined
                if next >= 1 && count_of(next - 1, &per_mode).is_none() {
                    let m = AngularMode::new(next - 1, p.dimension);
                    per_mode.push((Some(m), mode_negative_count(problem, Some(m), r, grid)?));
                }
                next += 1;
            }
            per_mode.sort_by_key(|(m, _)| m.map(|m| m.nu));
            for w in per_mode.windows(2) {
                assert!(
                    w[1].1 <= w[0].1 || w[1].0.unwrap().nu != w[0].0.unwrap().nu + 1,
                    "negative count increased with the angular degree"
                );
            }
            let total = per_mode.iter().map(|(m, c)| c * m.map_or(1, |m| m.multiplicity_weight)).sum();
            Ok(MorseProfile { total, per_mode })
        }
    }
}

pub fn morse_index(problem: &Problem, r: f64, grid: &Grid) -> Result<usize> {
    Ok(morse_profile(problem, r, grid)?.total)
}

/// Approximate kernel of a pencil: eigenvectors whose eigenvalues satisfy
/// |λ| ≤ τ · max|diag K|, orthonormal in the M inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBasis {
    pub tolerance: f64,
    pub threshold: f64,
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn kernel_basis(pencil: &OperatorPencil, tau: f64) -> Result<KernelBasis> {
    if !(tau > 0.0 && tau <= 1e-3) {
        return Err(Error::Config(format!("kernel tolerance {tau} outside (0, 1e-3]")));
    }
    let mut threshold = tau * pencil.k.max_abs_diagonal();
    if threshold == 0.0 {
        // K = 0: everything is kernel
        threshold = tau * pencil.m.max_abs_diagonal();
    }
    let below = count_below(pencil, -threshold)?;
    let upto = count_below(pencil, threshold)?;
    let pairs = eigenpairs_in_range(pencil, below..upto)?;
    let (eigenvalues, vectors) = pairs.into_iter().unzip();
    Ok(KernelBasis { tolerance: tau, threshold, eigenvalues, vectors })
}

/// The `k` algebraically smallest generalized eigenpairs, eigenvectors
/// M-normalized.
pub fn smallest_eigenpairs(pencil: &OperatorPencil, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    if k > pencil.order() {
        return Err(Error::Config(format!("requested {k} eigenpairs of a pencil of order {}", pencil.order())));
    }
    eigenpairs_in_range(pencil, 0..k)
}

/// Eigenvalue `index` (0-based, ascending) by bisection on inertia counts.
pub fn bisect_eigenvalue(pencil: &OperatorPencil, index: usize) -> Result<f64> {
    let (mut lo, mut hi) = spectrum_bracket(pencil, index)?;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        if count_below(pencil, mid)? > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// lo with count(lo) <= index, hi with count(hi) > index
fn spectrum_bracket(pencil: &OperatorPencil, index: usize) -> Result<(f64, f64)> {
    let (glo, ghi) = pencil.k.gershgorin();
    let mut step = glo.abs().max(ghi.abs()).max(1.0);
    let mut lo = -step;
    while count_below(pencil, lo)? > index {
        step *= 2.0;
        lo = -step;
        if !lo.is_finite() {
            return Err(Error::InertiaBreakdown(lo));
        }
    }
    let mut hi = step;
    while count_below(pencil, hi)? <= index {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InertiaBreakdown(hi));
        }
    }
    Ok((lo, hi))
}

fn m_dot(pencil: &OperatorPencil, x: &[f64], y: &[f64]) -> f64 {
    pencil.m.bilinear(x, y)
}

fn m_normalize(pencil: &OperatorPencil, x: &mut [f64]) -> f64 {
    let norm = m_dot(pencil, x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    norm
}

fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = ((i + 1) as f64 * 12.989_8 + (seed + 1) as f64 * 78.233).sin() * 43_758.545_3;
            t - t.floor() - 0.5
        })
        .collect()
}

fn eigenpairs_in_range(pencil: &OperatorPencil, range: std::ops::Range<usize>) -> Result<Vec<(f64, Vec<f64>)>> {
    let values: Vec<f64> =
        range.clone().into_par_iter().map(|j| bisect_eigenvalue(pencil, j)).collect::<Result<_>>()?;
    // backward-error scale; M keeps it meaningful when K vanishes
    let k_norm = pencil.k.norm_inf().max(pencil.m.norm_inf());
    let n = pencil.order();
    let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(values.len());

    for (slot, &lambda) in values.iter().enumerate() {
        let cluster_tol = 1e-8 * lambda.abs().max(1.0);
        let delta = 1e-10 * lambda.abs().max(1.0);
        let factor = pencil.k.combine(1.0, &pencil.m, -(lambda - delta)).factor()?;
        let mut x = start_vector(n, slot);
        m_normalize(pencil, &mut x);
        let mut converged = false;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            let mut y = factor.solve(&pencil.m.matvec(&x));
            // two Gram–Schmidt passes keep clustered vectors orthogonal
            for _ in 0..2 {
                for (mu, v) in &out {
                    if (mu - lambda).abs() <= cluster_tol {
                        let proj = m_dot(pencil, v, &y);
                        y.iter_mut().zip(v).for_each(|(a, b)| *a -= proj * b);
                    }
                }
            }
            m_normalize(pencil, &mut y);
            // fix the sign so successive iterates are comparable
            let pivot = y.iter().copied().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
            if pivot < 0.0 {
                y.iter_mut().for_each(|v| *v = -*v);
            }
            let change = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = y;
            let residual = residual_norm(pencil, lambda, &x);
            if residual <= 1e-10 * k_norm || (change <= 1e-12 && residual <= 1e-6 * k_norm) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::EigensolverStagnation(lambda));
        }
        out.push((lambda, x));
    }
    Ok(out)
}

/// `‖K c - λ M c‖₂`.
pub fn residual_norm(pencil: &OperatorPencil, lambda: f64, c: &[f64]) -> f64 {
    let kc = pencil.k.matvec(c);
    let mc = pencil.m.matvec(c);
    kc.iter().zip(&mc).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

// Bunch–Kaufman constant (1 + sqrt(17)) / 8.
const BK_ALPHA: f64 = 0.640_388_203_202_208_4;

/// Inertia of a dense symmetric matrix via Bunch–Kaufman LDL^T with
/// symmetric pivoting.
pub fn dense_inertia(matrix: &DMatrix<f64>) -> Inertia {
    let n = matrix.nrows();
    let mut a = matrix.clone();
    let mut inertia = Inertia::default();
    let mut k = 0;
    while k < n {
        let (mut r, mut lambda) = (k, 0.0);
        for i in k + 1..n {
            if a[(i, k)].abs() > lambda {
                lambda = a[(i, k)].abs();
                r = i;
            }
        }
        let akk = a[(k, k)].abs();
        let two_by_two = if lambda == 0.0 || akk >= BK_ALPHA * lambda {
            false
        } else {
            let sigma = (k..n).filter(|&i| i != r).map(|i| a[(i, r)].abs()).fold(0.0, f64::max);
            if akk * sigma >= BK_ALPHA * lambda * lambda {
                false
            } else if a[(r, r)].abs() >= BK_ALPHA * sigma {
                a.swap_rows(k, r);
                a.swap_columns(k, r);
                false
            } else {
                a.swap_rows(k + 1, r);
                a.swap_columns(k + 1, r);
                true
            }
        };
        if !two_by_two {
            let d = a[(k, k)];
            inertia.count_scalar(d);
            if d != 0.0 {
                for i in k + 1..n {
                    let lik = a[(i, k)] / d;
                    for j in k + 1..=i {
                        let v = a[(i, j)] - lik * a[(j, k)];
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
            }
            k += 1;
        } else {
            let (p, q, s) = (a[(k, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
            inertia.count_block(p, q, s);
            let det = p * s - q * q;
            for i in k + 2..n {
                let (ui, vi) = (a[(i, k)], a[(i, k + 1)]);
                // row i of B E^{-1}
                let wi0 = (s * ui - q * vi) / det;
                let wi1 = (p * vi - q * ui) / det;
                for j in k + 2..=i {
                    let v = a[(i, j)] - wi0 * a[(j, k)] - wi1 * a[(j, k + 1)];
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            k += 2;
        }
    }
    inertia
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::SymmetricBandedMatrix;
    use crate::problem::{CoefficientField, Interval1DProblem};
    use std::f64::consts::PI;

    fn interval(f: f64) -> Problem {
        Interval1DProblem::new(CoefficientField::constant(1.0), CoefficientField::constant(f)).into()
    }

    #[test]
    fn identity_pencil() {
        let n = 12;
        let p = OperatorPencil::new(SymmetricBandedMatrix::identity(n), SymmetricBandedMatrix::identity(n));
        assert_eq!(pencil_inertia(&p, 0.0).unwrap(), Inertia { n_neg: 0, n_zero: 0, n_pos: n });
        let pairs = smallest_eigenpairs(&p, 4).unwrap();
        for (i, (l, v)) in pairs.iter().enumerate() {
            assert!((l - 1.0).abs() < 1e-12);
            for (_, w) in &pairs[..i] {
                let d: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                assert!(d.abs() < 1e-10, "{i} {d} {l}");
            }
        }
    }

    #[test]
    fn shift_below_gershgorin_has_no_negatives() {
        let grid = Grid::new(101).unwrap();
        let pencil = assemble_operator(&interval(-(2.5 * PI).powi(2)), None, 1.0, &grid).unwrap();
        let (lo, _) = pencil.k.gershgorin();
        let m_max = pencil.m.gershgorin().1;
        // λ_min ≥ lo / λ_max(M) when lo < 0
        let bound = (lo / m_max).min(0.0) - 1.0;
        assert_eq!(pencil_inertia(&pencil, bound).unwrap().n_neg, 0);
    }

    #[test]
    fn laplacian_eigenvalues() {
        let grid = Grid::new(2001).unwrap();
        let pencil = assemble_operator(&interval(0.0), None, 1.0, &grid).unwrap();
        let pairs = smallest_eigenpairs(&pencil, 3).unwrap();
        let k_norm = pencil.k.norm_inf();
        for (k, (l, v)) in pairs.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI).powi(2);
            assert!((l - exact).abs() / exact < 1e-3);
            assert!(residual_norm(&pencil, *l, v) <= 1e-6 * k_norm);
            assert!((m_dot(&pencil, v, v) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_shift_identity() {
        let grid = Grid::new(301).unwrap();
        let c = 17.25;
        let base = smallest_eigenpairs(&assemble_operator(&interval(0.0), None, 1.0, &grid).unwrap(), 4).unwrap();
        let shifted = smallest_eigenpairs(&assemble_operator(&interval(-c), None, 1.0, &grid).unwrap(), 4).unwrap();
        for ((a, _), (b, _)) in base.iter().zip(&shifted) {
            assert!((a - c - b).abs() < 1e-8 * a.abs());
        }
    }

    #[test]
    fn interval_morse_indices() {
        let grid = Grid::new(2001).unwrap();
        assert_eq!(morse_index(&interval(0.0), 1.0, &grid).unwrap(), 0);
        assert_eq!(morse_index(&interval(-(2.5 * PI).powi(2)), 1.0, &grid).unwrap(), 2);
        let pencil = assemble_operator(&interval(-(2.5 * PI).powi(2)), None, 1.0, &grid).unwrap();
        assert_eq!(pencil_inertia(&pencil, 0.0).unwrap().n_neg, 2);
    }

    #[test]
    fn kernel_of_positive_definite_is_empty() {
        let grid = Grid::new(200).unwrap();
        let pencil = assemble_operator(&interval(0.0), None, 1.0, &grid).unwrap();
        assert!(kernel_basis(&pencil, 1e-8).unwrap().is_empty());
        assert!(kernel_basis(&pencil, 0.0).is_err());
        assert!(kernel_basis(&pencil, 0.1).is_err());
    }

    #[test]
    fn dense_inertia_matches_eigen() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 2.0, 0.5, //
                1.0, 0.0, 0.3, -1.0, //
                2.0, 0.3, -1.0, 0.0, //
                0.5, -1.0, 0.0, 2.0,
            ],
        );
        let eig = m.clone().symmetric_eigenvalues();
        let neg = eig.iter().filter(|&&v| v < 0.0).count();
        let i = dense_inertia(&m);
        assert_eq!(i.n_neg, neg);
        assert_eq!(i.order(), 4);
        assert_eq!(dense_inertia(&DMatrix::zeros(3, 3)).n_zero, 3);
    }
}
