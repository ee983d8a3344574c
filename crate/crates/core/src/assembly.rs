//! Piecewise-linear Galerkin discretization of the rescaled second
//! variation at radius r, and of its exact r-derivative.
//!
//! On the unit interval (or the radial coordinate of the unit ball) the
//! bilinear form at parameter r reads
//!
//! ```text
//! K(r)[u, v] = ∫ w a(r x) u' v' + λ_ang ∫ (w / x²) a(r x) u v + r² ∫ w f(r x) u v
//! ```
//!
//! with weight `w = x^(n-1)` and `λ_ang = ν(ν + n - 2)` for the angular mode
//! ν (both trivial on the interval). `M` is the weighted L² Gram matrix.

use crate::banded::{Inertia, SymmetricBandedMatrix};
use crate::error::{Error, Result};
use crate::problem::{AngularMode, Problem};

pub const MIN_GRID_NODES: usize = 16;

/// Uniform partition of [0, 1] into `nodes - 1` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    nodes: usize,
}

impl Grid {
    pub fn new(nodes: usize) -> Result<Self> {
        if nodes < MIN_GRID_NODES {
            return Err(Error::Config(format!("grid needs at least {MIN_GRID_NODES} nodes, got {nodes}")));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            1.0
        } else {
            i as f64 * self.h()
        }
    }
}

/// How one mode of a problem maps onto the grid: weight exponent, angular
/// eigenvalue and whether the origin node is a free unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeLayout {
    pub weight_exponent: i32,
    pub angular: f64,
    pub origin_free: bool,
}

impl ModeLayout {
    pub fn for_mode(problem: &Problem, mode: Option<AngularMode>) -> Result<Self> {
        match problem {
            Problem::Interval(_) => Ok(Self { weight_exponent: 0, angular: 0.0, origin_free: false }),
            Problem::Radial(p) => {
                let mode = mode
                    .ok_or_else(|| Error::Config("radial problems are assembled one angular mode at a time".into()))?;
                Ok(Self {
                    weight_exponent: p.dimension as i32 - 1,
                    angular: mode.angular_eigenvalue(p.dimension),
                    // nu = 0 carries the natural condition u'(0) = 0
                    origin_free: mode.nu == 0,
                })
            }
        }
    }

    fn first_unknown(&self) -> usize {
        if self.origin_free {
            0
        } else {
            1
        }
    }

    pub fn order(&self, grid: &Grid) -> usize {
        grid.nodes() - 1 - self.first_unknown()
    }

    pub fn weight(&self, x: f64) -> f64 {
        x.powi(self.weight_exponent)
    }

    /// Expands a coefficient vector into nodal values on the full grid.
    pub fn nodal_values(&self, grid: &Grid, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; grid.nodes()];
        let first = self.first_unknown();
        out[first..first + coeffs.len()].copy_from_slice(coeffs);
        out
    }
}

/// Generalized symmetric pair (K, M) with M positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPencil {
    pub k: SymmetricBandedMatrix,
    pub m: SymmetricBandedMatrix,
}

impl OperatorPencil {
    pub fn new(k: SymmetricBandedMatrix, m: SymmetricBandedMatrix) -> Self {
        assert_eq!(k.order(), m.order(), "pencil matrices must have equal order");
        Self { k, m }
    }

    pub fn order(&self) -> usize {
        self.k.order()
    }

    /// The pencil (K - σM, M).
    pub fn shifted(&self, sigma: f64) -> Self {
        Self { k: self.k.combine(1.0, &self.m, -sigma), m: self.m.clone() }
    }

    /// Checks that M has inertia (0, 0, order).
    pub fn mass_is_positive_definite(&self) -> Result<bool> {
        let i: Inertia = self.m.factor()?.inertia();
        Ok(i.n_neg == 0 && i.n_zero == 0)
    }
}

// 3-point Gauss–Legendre rule on [0, 1].
const GAUSS: [(f64, f64); 3] =
    [(0.112_701_665_379_258_31, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.887_298_334_620_741_7, 5.0 / 18.0)];

/// Densities multiplying u'v', (w/x²) u v and w u v respectively; the
/// weight w is applied by the assembler.
fn assemble_form(
    layout: &ModeLayout,
    grid: &Grid,
    gradient: impl Fn(f64) -> f64,
    angular: impl Fn(f64) -> f64,
    potential: impl Fn(f64) -> f64,
) -> Result<SymmetricBandedMatrix> {
    let n = grid.nodes();
    let h = grid.h();
    let first = layout.first_unknown();
    let mut mat = SymmetricBandedMatrix::zeros(layout.order(grid), 1);
    let index = |node: usize| (node >= first && node + 1 < n).then(|| node - first);
    let with_angular = layout.angular != 0.0;

    for e in 0..n - 1 {
        let x0 = grid.node(e);
        let (mut grad, mut ll, mut lr, mut rr) = (0.0, 0.0, 0.0, 0.0);
        for &(t, wq) in &GAUSS {
            let x = x0 + t * h;
            let w = layout.weight(x) * wq * h;
            grad += w * gradient(x);
            let mut mass_density = potential(x);
            if with_angular {
                mass_density += layout.angular * angular(x) / (x * x);
            }
            let (pl, pr) = (1.0 - t, t);
            ll += w * mass_density * pl * pl;
            lr += w * mass_density * pl * pr;
            rr += w * mass_density * pr * pr;
        }
        let stiff = grad / (h * h);
        let (il, ir) = (index(e), index(e + 1));
        if let Some(i) = il {
            mat.add(i, i, stiff + ll);
        }
        if let Some(j) = ir {
            mat.add(j, j, stiff + rr);
        }
        if let (Some(i), Some(j)) = (il, ir) {
            mat.add(j, i, -stiff + lr);
        }
    }
    if !mat.is_finite() {
        return Err(Error::CoefficientEvaluationFailure("quadrature produced a non-finite matrix entry".into()));
    }
    Ok(mat)
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(r))
    }
}

/// Weighted L² Gram matrix of the basis for this mode.
pub fn mass_matrix(problem: &Problem, mode: Option<AngularMode>, grid: &Grid) -> Result<SymmetricBandedMatrix> {
    let layout = ModeLayout::for_mode(problem, mode)?;
    assemble_form(&layout, grid, |_| 0.0, |_| 0.0, |_| 1.0)
}

pub fn assemble_operator(problem: &Problem, mode: Option<AngularMode>, r: f64, grid: &Grid) -> Result<OperatorPencil> {
    check_radius(r)?;
    let layout = ModeLayout::for_mode(problem, mode)?;
    let (a, f) = (problem.a(), problem.f());
    let k = assemble_form(&layout, grid, |x| a.value(r * x), |x| a.value(r * x), |x| r * r * f.value(r * x))?;
    let m = assemble_form(&layout, grid, |_| 0.0, |_| 0.0, |_| 1.0)?;
    Ok(OperatorPencil::new(k, m))
}

/// Exact r-derivative of the matrix produced by [`assemble_operator`].
pub fn assemble_parameter_derivative(
    problem: &Problem,
    mode: Option<AngularMode>,
    r: f64,
    grid: &Grid,
) -> Result<SymmetricBandedMatrix> {
    check_radius(r)?;
    let layout = ModeLayout::for_mode(problem, mode)?;
    let (a, f) = (problem.a(), problem.f());
    if !a.is_differentiable() {
        return Err(Error::DerivativeUnavailable("a".into()));
    }
    if !f.is_differentiable() {
        return Err(Error::DerivativeUnavailable("f".into()));
    }
    let da = |x: f64| x * a.slope(r * x).unwrap_or(f64::NAN);
    assemble_form(&layout, grid, da, da, |x| 2.0 * r * f.value(r * x) + r * r * x * f.slope(r * x).unwrap_or(f64::NAN))
}
