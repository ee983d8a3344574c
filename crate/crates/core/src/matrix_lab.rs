//! Finite-dimensional test bed: C¹ paths of symmetric matrices, their
//! crossings, the Morse-index jump formula and the isolation bound.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_operator, assemble_parameter_derivative, Grid};
use crate::error::{Error, Result};
use crate::inertia::dense_inertia;
use crate::problem::{AngularMode, Problem};

pub const MIN_DIMENSION: usize = 2;
pub const MAX_DIMENSION: usize = 64;
pub const DEFAULT_SAMPLES: usize = 400;
pub const DEFAULT_KERNEL_TOL: f64 = 1e-8;
pub const DEFAULT_REGULARITY_TOL: f64 = 1e-6;
const ISOLATION_MARGIN: f64 = 1e-6;
const ISOLATION_FLOOR: f64 = 1e-4;

/// A diagonal entry and its derivative.
pub type DiagonalEntry = (fn(f64) -> f64, fn(f64) -> f64);

type MatrixFn = Box<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Provenance {
    ClosedForm(String),
    RandomTrigonometric { seed: u64 },
    Discretized(String),
}

pub struct MatrixPath {
    dim: usize,
    eval: MatrixFn,
    deriv: MatrixFn,
    pub provenance: Provenance,
}

impl std::fmt::Debug for MatrixPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatrixPath").field("dim", &self.dim).field("provenance", &self.provenance).finish()
    }
}

fn symmetric_gaussian(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    (&g + g.transpose()) * 0.5
}

/// Smallest |eigenvalue| of a symmetric matrix, i.e. its smallest singular value.
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().fold(0.0, |a: f64, v| a.max(v.abs()))
}

/// Number of negative eigenvalues from a full eigendecomposition.
pub fn eigen_morse_index(m: &DMatrix<f64>) -> usize {
    m.clone().symmetric_eigenvalues().iter().filter(|&&v| v < 0.0).count()
}

impl MatrixPath {
    pub fn new(
        dim: usize,
        eval: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        deriv: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        provenance: Provenance,
    ) -> Result<Self> {
        if !(MIN_DIMENSION..=MAX_DIMENSION).contains(&dim) {
            return Err(Error::Config(format!(
                "matrix path dimension {dim} outside [{MIN_DIMENSION}, {MAX_DIMENSION}]"
            )));
        }
        Ok(Self { dim, eval: Box::new(eval), deriv: Box::new(deriv), provenance })
    }

    /// Diagonal path from scalar entries and their derivatives.
    pub fn diagonal(entries: Vec<DiagonalEntry>, label: &str) -> Result<Self> {
        let d = entries.len();
        let values = entries.clone();
        Self::new(
            d,
            move |l| DMatrix::from_diagonal(&DVector::from_iterator(d, values.iter().map(|(f, _)| f(l)))),
            move |l| DMatrix::from_diagonal(&DVector::from_iterator(d, entries.iter().map(|(_, g)| g(l)))),
            Provenance::ClosedForm(label.to_string()),
        )
    }

    /// `A0 + λ A1 + sin(πλ) A2` with symmetric Gaussian entries; redrawn
    /// until both endpoints are comfortably invertible.
    pub fn random(seed: u64, dim: usize) -> Result<Self> {
        if !(MIN_DIMENSION..=MAX_DIMENSION).contains(&dim) {
            return Err(Error::Config(format!(
                "matrix path dimension {dim} outside [{MIN_DIMENSION}, {MAX_DIMENSION}]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a0, a1, a2) = loop {
            let a0 = symmetric_gaussian(&mut rng, dim);
            let a1 = symmetric_gaussian(&mut rng, dim);
            let a2 = symmetric_gaussian(&mut rng, dim);
            let end = &a0 + &a1;
            if sigma_min(&a0) >= 1e-3 * spectral_norm(&a0) && sigma_min(&end) >= 1e-3 * spectral_norm(&end) {
                break (a0, a1, a2);
            }
        };
        let (b1, b2) = (a1.clone(), a2.clone());
        Self::new(
            dim,
            move |l| &a0 + &a1 * l + &a2 * (std::f64::consts::PI * l).sin(),
            move |l| &b1 + &b2 * (std::f64::consts::PI * (std::f64::consts::PI * l).cos()),
            Provenance::RandomTrigonometric { seed },
        )
    }

    /// The pencil of one mode on a coarse grid as a path in λ ∈ [0, 1],
    /// `L(λ) = C⁻¹ K(r) C⁻ᵀ` with `M = C Cᵀ` and `r = r_min + (1 - r_min) λ`.
    pub fn from_problem(problem: &Problem, mode: Option<AngularMode>, grid: Grid, r_min: f64) -> Result<Self> {
        let pencil = assemble_operator(problem, mode, 1.0, &grid)?;
        let dim = pencil.order();
        let to_dense = move |m: &crate::banded::SymmetricBandedMatrix| {
            let rows = m.to_dense();
            DMatrix::from_fn(dim, dim, |i, j| rows[i][j])
        };
        let chol = nalgebra::Cholesky::new(to_dense(&pencil.m))
            .ok_or_else(|| Error::Config("mass matrix is not positive definite".into()))?;
        let c_inv = chol.l().try_inverse().ok_or_else(|| Error::Config("mass factor is singular".into()))?;
        let c_inv_t = c_inv.transpose();
        let (ci, cit) = (c_inv.clone(), c_inv_t.clone());
        let (p1, p2) = (problem.clone(), problem.clone());
        let span = 1.0 - r_min;
        // the evaluators cannot fail for radii in (0, 1]; NaN surfaces misuse
        let nan = DMatrix::from_element(dim, dim, f64::NAN);
        let nan2 = nan.clone();
        Self::new(
            dim,
            move |l| match assemble_operator(&p1, mode, r_min + span * l, &grid) {
                Ok(p) => &c_inv * to_dense(&p.k) * &c_inv_t,
                Err(_) => nan.clone(),
            },
            move |l| match assemble_parameter_derivative(&p2, mode, r_min + span * l, &grid) {
                Ok(k) => {
                    let rows = k.to_dense();
                    &ci * DMatrix::from_fn(dim, dim, |i, j| rows[i][j]) * &cit * span
                }
                Err(_) => nan2.clone(),
            },
            Provenance::Discretized(problem.describe()),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, lambda: f64) -> DMatrix<f64> {
        (self.eval)(lambda)
    }

    pub fn derivative(&self, lambda: f64) -> DMatrix<f64> {
        (self.deriv)(lambda)
    }

    /// Symmetry of both evaluators and agreement of the derivative with
    /// central differences (δ = 1e-4) at a few parameters.
    pub fn check_consistency(&self) -> Result<()> {
        let delta = 1e-4;
        for k in 1..=5 {
            let l = k as f64 / 6.0;
            let (m, dm) = (self.at(l), self.derivative(l));
            for (name, mat) in [("value", &m), ("derivative", &dm)] {
                let asym = (mat - mat.transpose()).amax();
                if asym > 1e-12 * mat.amax().max(1.0) {
                    return Err(Error::Config(format!("path {name} not symmetric at {l}: {asym:e}")));
                }
            }
            let fd = (self.at(l + delta) - self.at(l - delta)) / (2.0 * delta);
            let err = (&fd - &dm).amax();
            if err > 1e-6 * dm.amax().max(1.0) {
                return Err(Error::Config(format!("path derivative inconsistent at {l}: {err:e}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixCrossing {
    pub lambda0: f64,
    #[serde(skip)]
    pub kernel: Vec<DVector<f64>>,
    #[serde(skip)]
    pub gamma: DMatrix<f64>,
    pub signature: i64,
    pub regular: bool,
}

impl MatrixCrossing {
    pub fn kernel_dim(&self) -> usize {
        self.kernel.len()
    }
}

fn count_neg(path: &MatrixPath, l: f64) -> usize {
    dense_inertia(&path.at(l)).n_neg
}

// Bisects for the parameter where the count first reaches `level`,
// rising (`up`) or falling.
fn bisect_count(path: &MatrixPath, mut lo: f64, mut hi: f64, up: bool, level: usize) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < 1e-15 {
            break;
        }
        let c = count_neg(path, mid);
        let reached = if up { c >= level } else { c <= level };
        if reached {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_minimum(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Kernel, crossing form and signature at λ0. Regularity is judged against
/// max(‖Γ‖, ‖L(λ0)‖) so that a vanishing form is never called regular.
pub fn analyse_crossing(path: &MatrixPath, lambda0: f64, kernel_tol: f64, regularity_tol: f64) -> MatrixCrossing {
    let l = path.at(lambda0);
    let eig = l.clone().symmetric_eigen();
    let norm = eig.eigenvalues.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let mut idx: Vec<usize> = (0..path.dim()).filter(|&i| eig.eigenvalues[i].abs() <= kernel_tol * norm).collect();
    if idx.is_empty() {
        let closest =
            (0..path.dim()).min_by(|&i, &j| eig.eigenvalues[i].abs().total_cmp(&eig.eigenvalues[j].abs())).unwrap();
        idx.push(closest);
    }
    let kernel: Vec<DVector<f64>> = idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let v = DMatrix::from_columns(&kernel);
    let gamma = v.transpose() * path.derivative(lambda0) * &v;
    let g_eig = gamma.clone().symmetric_eigenvalues();
    let g_norm = g_eig.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    let cut = regularity_tol * g_norm.max(norm);
    let pos = g_eig.iter().filter(|&&x| x > cut).count() as i64;
    let neg = g_eig.iter().filter(|&&x| x < -cut).count() as i64;
    let regular = g_eig.iter().all(|x| x.abs() > cut);
    MatrixCrossing { lambda0, kernel, gamma, signature: pos - neg, regular }
}

fn check_endpoint(path: &MatrixPath, l: f64, tol: f64) -> Result<()> {
    let m = path.at(l);
    if sigma_min(&m) <= tol * spectral_norm(&m).max(f64::MIN_POSITIVE) {
        return Err(Error::EndpointSingular(l));
    }
    Ok(())
}

/// Crossings of the path in (a, b): inertia changes located by bisection,
/// plus touching crossings found as zeros of min |eigenvalue| at its local
/// minima.
pub fn find_crossings_between(
    path: &MatrixPath,
    a: f64,
    b: f64,
    samples: usize,
    tol: f64,
) -> Result<Vec<MatrixCrossing>> {
    check_endpoint(path, a, tol)?;
    check_endpoint(path, b, tol)?;
    let samples = samples.max(8);
    let grid: Vec<f64> = (0..samples).map(|i| a + (b - a) * i as f64 / (samples - 1) as f64).collect();
    let counts: Vec<usize> = grid.iter().map(|&l| count_neg(path, l)).collect();
    let mut roots: Vec<f64> = Vec::new();

    for i in 0..samples - 1 {
        if counts[i] == counts[i + 1] {
            continue;
        }
        // raise the density until each sub-bracket moves the count by one
        let mut brackets = vec![(grid[i], grid[i + 1], counts[i], counts[i + 1])];
        for _ in 0..4 {
            if brackets.iter().all(|&(_, _, c0, c1)| c0.abs_diff(c1) <= 1) {
                break;
            }
            let mut next = Vec::new();
            for (lo, hi, c0, c1) in brackets {
                if c0.abs_diff(c1) <= 1 {
                    next.push((lo, hi, c0, c1));
                    continue;
                }
                let mid = 0.5 * (lo + hi);
                let cm = count_neg(path, mid);
                if cm != c0 {
                    next.push((lo, mid, c0, cm));
                }
                if cm != c1 {
                    next.push((mid, hi, cm, c1));
                }
            }
            brackets = next;
        }
        for (lo, hi, c0, c1) in brackets {
            let up = c1 > c0;
            let levels: Vec<usize> = if up { (c0 + 1..=c1).collect() } else { (c1..c0).rev().collect() };
            let mut local: Vec<f64> = levels.iter().map(|&lv| bisect_count(path, lo, hi, up, lv)).collect();
            local.dedup_by(|x, y| (*x - *y).abs() <= 1e-10);
            if local.len() > 1 && (local[local.len() - 1] - local[0]).abs() <= (hi - lo) * 1e-6 {
                return Err(Error::BracketAmbiguous { lo, hi });
            }
            roots.extend(local);
        }
    }

    // touching crossings leave the inertia unchanged
    let spacing = (b - a) / (samples - 1) as f64;
    let smin: Vec<f64> = grid.iter().map(|&l| sigma_min(&path.at(l))).collect();
    for i in 1..samples - 1 {
        if smin[i] <= smin[i - 1] && smin[i] <= smin[i + 1] {
            if roots.iter().any(|&r| (r - grid[i]).abs() <= 2.0 * spacing) {
                continue;
            }
            let (x, v) = golden_minimum(|l| sigma_min(&path.at(l)), grid[i - 1], grid[i + 1]);
            if v <= tol * spectral_norm(&path.at(x)) {
                roots.push(x);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots.into_iter().map(|l| analyse_crossing(path, l, tol, DEFAULT_REGULARITY_TOL)).collect())
}

pub fn find_crossings(path: &MatrixPath, samples: usize, tol: f64) -> Result<Vec<MatrixCrossing>> {
    find_crossings_between(path, 0.0, 1.0, samples, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseJump {
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
    pub crossings: Vec<MatrixCrossing>,
}

/// μ₋(L_a) − μ₋(L_b) against Σ sgn Γ over the crossings in (a, b).
pub fn verify_morse_jump(path: &MatrixPath, a: f64, b: f64) -> Result<MorseJump> {
    let crossings = find_crossings_between(path, a, b, DEFAULT_SAMPLES, DEFAULT_KERNEL_TOL)?;
    if let Some(c) = crossings.iter().find(|c| !c.regular) {
        return Err(Error::DegenerateCrossing(c.lambda0));
    }
    let lhs = eigen_morse_index(&path.at(a)) as i64 - eigen_morse_index(&path.at(b)) as i64;
    let rhs = crossings.iter().map(|c| c.signature).sum();
    Ok(MorseJump { lhs, rhs, holds: lhs == rhs, crossings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsolationBound {
    pub epsilon: f64,
    pub c: f64,
    pub holds: bool,
}

/// Lower bound C on σ_min(L_λ) / |λ − λ0| over a punctured ball, for the
/// largest ε in 0.1, 0.05, ... (down to 1e-4) where the bound is positive.
pub fn verify_isolation_bound(path: &MatrixPath, lambda0: f64) -> Result<IsolationBound> {
    let scale = spectral_norm(&path.at(lambda0)).max(spectral_norm(&path.derivative(lambda0)));
    let mut epsilon = 0.1;
    while epsilon >= ISOLATION_FLOOR {
        let mut c = f64::INFINITY;
        // 25 geometric distances on each side
        for k in 0..25 {
            let d = epsilon / f64::powi(2.0, k);
            for l in [lambda0 - d, lambda0 + d] {
                if (0.0..=1.0).contains(&l) {
                    c = c.min(sigma_min(&path.at(l)) / d);
                }
            }
        }
        if c.is_finite() && c > ISOLATION_MARGIN * scale.max(1.0) {
            return Ok(IsolationBound { epsilon, c, holds: true });
        }
        epsilon *= 0.5;
    }
    Err(Error::IsolationUnverified(lambda0))
}

/// One row of a seeded batch run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabRow {
    pub seed: u64,
    pub d: usize,
    pub n_crossings: usize,
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
}

/// Morse-jump verification over `count` seeds starting at `first_seed`,
/// cycling through `dims`.
pub fn run_batch(first_seed: u64, count: usize, dims: &[usize]) -> Result<Vec<LabRow>> {
    if dims.is_empty() {
        return Err(Error::Config("matrix lab needs at least one dimension".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = first_seed + i as u64;
            let d = dims[i % dims.len()];
            let path = MatrixPath::random(seed, d)?;
            let jump = verify_morse_jump(&path, 0.0, 1.0)?;
            Ok(LabRow { seed, d, n_crossings: jump.crossings.len(), lhs: jump.lhs, rhs: jump.rhs, holds: jump.holds })
        })
        .collect()
}
