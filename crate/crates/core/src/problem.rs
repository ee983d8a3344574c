//! Continuous problem descriptions: coefficient fields, the nonlinearity,
//! and the two supported geometries (an interval and a radially symmetric
//! ball split into angular modes).

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::spline::UniformSpline;

/// Number of uniform samples used for every pointwise check.
pub const VALIDATION_SAMPLES: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothness {
    C0,
    C1,
    #[default]
    CInf,
}

impl Smoothness {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c0" => Ok(Smoothness::C0),
            "c1" => Ok(Smoothness::C1),
            "cinf" | "c_inf" | "smooth" => Ok(Smoothness::CInf),
            other => Err(Error::Config(format!("unknown smoothness class '{other}'"))),
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Smoothness::C0 => "C0",
            Smoothness::C1 => "C1",
            Smoothness::CInf => "Cinf",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Closed { expr: Expr, slope: Expr },
    Table(UniformSpline),
}

/// A scalar coefficient on [0, 1], either closed-form or tabulated.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    repr: Repr,
    smoothness: Smoothness,
}

impl CoefficientField {
    pub fn closed(expr: Expr, smoothness: Smoothness) -> Self {
        let slope = expr.derivative(Var::X);
        Self { repr: Repr::Closed { expr, slope }, smoothness }
    }

    pub fn parse(src: &str) -> Result<Self> {
        let expr = Expr::parse(src)?;
        if expr.depends_on(Var::Xi) {
            return Err(Error::Config(format!("coefficient '{src}' must not depend on xi")));
        }
        Ok(Self::closed(expr, Smoothness::CInf))
    }

    pub fn constant(c: f64) -> Self {
        Self::closed(Expr::constant(c), Smoothness::CInf)
    }

    /// Samples at `k / (len - 1)`, k = 0..len.
    pub fn tabulated(samples: Vec<f64>, smoothness: Smoothness) -> Result<Self> {
        Ok(Self { repr: Repr::Table(UniformSpline::new(samples)?), smoothness })
    }

    /// Tabulates `self` on `samples` uniform nodes.
    pub fn tabulate(&self, samples: usize) -> Result<Self> {
        let step = 1.0 / (samples - 1) as f64;
        let values = (0..samples).map(|k| self.value(k as f64 * step)).collect();
        Self::tabulated(values, self.smoothness)
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn as_const(&self) -> Option<f64> {
        match &self.repr {
            Repr::Closed { expr, .. } => expr.as_const(),
            Repr::Table(_) => None,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Closed { expr, .. } => expr.eval(x, 0.0),
            Repr::Table(s) => s.value(x),
        }
    }

    /// First derivative; `None` when the field is declared C0.
    pub fn slope(&self, x: f64) -> Option<f64> {
        if self.smoothness == Smoothness::C0 {
            return None;
        }
        Some(match &self.repr {
            Repr::Closed { slope, .. } => slope.eval(x, 0.0),
            Repr::Table(s) => s.slope(x),
        })
    }

    pub fn is_differentiable(&self) -> bool {
        self.smoothness != Smoothness::C0
    }
}

impl fmt::Display for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Closed { expr, .. } => write!(f, "{expr} [{}]", self.smoothness),
            Repr::Table(s) => {
                write!(f, "table{:?} [{}]", s.samples(), self.smoothness)
            }
        }
    }
}

/// g(x, xi) together with its symbolic xi-derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    g: Expr,
    dg_dxi: Expr,
    pub growth_exponent: f64,
}

impl Nonlinearity {
    pub fn new(g: Expr, growth_exponent: f64) -> Self {
        let dg_dxi = g.derivative(Var::Xi);
        Self { g, dg_dxi, growth_exponent }
    }

    pub fn parse(src: &str, growth_exponent: f64) -> Result<Self> {
        Ok(Self::new(Expr::parse(src)?, growth_exponent))
    }

    pub fn g(&self, x: f64, xi: f64) -> f64 {
        self.g.eval(x, xi)
    }

    pub fn dg_dxi(&self, x: f64, xi: f64) -> f64 {
        self.dg_dxi.eval(x, xi)
    }

    /// The linearization f(x) = dg/dxi(x, 0) as a coefficient field.
    pub fn linearization(&self) -> CoefficientField {
        let at_zero = substitute_zero(&self.dg_dxi).simplify();
        CoefficientField::closed(at_zero, Smoothness::CInf)
    }

    pub fn expr(&self) -> &Expr {
        &self.g
    }
}

fn substitute_zero(e: &Expr) -> Expr {
    use Expr::*;
    let s = |a: &Expr| Box::new(substitute_zero(a));
    match e {
        Var(crate::expr::Var::Xi) => Const(0.0),
        Const(_) | Var(_) => e.clone(),
        Neg(a) => Neg(s(a)),
        Add(a, c) => Add(s(a), s(c)),
        Sub(a, c) => Sub(s(a), s(c)),
        Mul(a, c) => Mul(s(a), s(c)),
        Div(a, c) => Div(s(a), s(c)),
        Pow(a, c) => Pow(s(a), s(c)),
        Sin(a) => Sin(s(a)),
        Cos(a) => Cos(s(a)),
        Exp(a) => Exp(s(a)),
        Ln(a) => Ln(s(a)),
    }
}

/// `-(a u')' + f u = 0` on [0, r] with Dirichlet data at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval1DProblem {
    pub a: CoefficientField,
    pub f: CoefficientField,
    pub g: Option<Nonlinearity>,
}

impl Interval1DProblem {
    pub fn new(a: CoefficientField, f: CoefficientField) -> Self {
        Self { a, f, g: None }
    }

    /// Takes f from the linearization of `g`.
    pub fn with_nonlinearity(a: CoefficientField, g: Nonlinearity) -> Self {
        let f = g.linearization();
        Self { a, f, g: Some(g) }
    }
}

/// A spherical-harmonic sector of the ball. `multiplicity_weight` is the
/// number of independent harmonics of degree `nu` on the sphere S^{n-1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AngularMode {
    pub nu: usize,
    pub multiplicity_weight: usize,
}

impl AngularMode {
    pub fn new(nu: usize, dimension: usize) -> Self {
        Self { nu, multiplicity_weight: harmonic_multiplicity(nu, dimension) }
    }

    /// Eigenvalue of the Laplace–Beltrami operator on S^{n-1}.
    pub fn angular_eigenvalue(&self, dimension: usize) -> f64 {
        (self.nu * (self.nu + dimension - 2)) as f64
    }
}

/// Dimension of degree-`nu` harmonic polynomials in `n` variables:
/// C(nu+n-1, n-1) - C(nu+n-3, n-1). Gives 1, 2, 2, ... for n = 2.
pub fn harmonic_multiplicity(nu: usize, n: usize) -> usize {
    fn binom(top: usize, k: usize) -> usize {
        if k > top {
            return 0;
        }
        let k = k.min(top - k);
        (0..k).fold(1usize, |acc, i| acc * (top - i) / (i + 1))
    }
    let lower = if nu >= 2 { binom(nu + n - 3, n - 1) } else { 0 };
    binom(nu + n - 1, n - 1) - lower
}

/// Isotropic operator `-div(a(|x|) grad u) + f(|x|) u` on the unit ball of
/// dimension `dimension`, analysed through `modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProblem {
    pub dimension: usize,
    pub a: CoefficientField,
    pub f: CoefficientField,
    pub modes: Vec<AngularMode>,
}

impl RadialProblem {
    pub fn new(dimension: usize, a: CoefficientField, f: CoefficientField, nus: &[usize]) -> Self {
        let modes = nus.iter().map(|&nu| AngularMode::new(nu, dimension)).collect();
        Self { dimension, a, f, modes }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Interval(Interval1DProblem),
    Radial(RadialProblem),
}

impl From<Interval1DProblem> for Problem {
    fn from(p: Interval1DProblem) -> Self {
        Problem::Interval(p)
    }
}

impl From<RadialProblem> for Problem {
    fn from(p: RadialProblem) -> Self {
        Problem::Radial(p)
    }
}

impl Problem {
    pub fn a(&self) -> &CoefficientField {
        match self {
            Problem::Interval(p) => &p.a,
            Problem::Radial(p) => &p.a,
        }
    }

    pub fn f(&self) -> &CoefficientField {
        match self {
            Problem::Interval(p) => &p.f,
            Problem::Radial(p) => &p.f,
        }
    }

    pub fn nonlinearity(&self) -> Option<&Nonlinearity> {
        match self {
            Problem::Interval(p) => p.g.as_ref(),
            Problem::Radial(_) => None,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Problem::Interval(_) => 1,
            Problem::Radial(p) => p.dimension,
        }
    }

    /// Modes to analyse. The interval has a single implicit mode.
    pub fn modes(&self) -> Vec<Option<AngularMode>> {
        match self {
            Problem::Interval(_) => vec![None],
            Problem::Radial(p) => p.modes.iter().copied().map(Some).collect(),
        }
    }

    /// Canonical one-line description, used for digests.
    pub fn describe(&self) -> String {
        match self {
            Problem::Interval(p) => format!(
                "interval; a = {}; f = {}; g = {}",
                p.a,
                p.f,
                p.g.as_ref()
                    .map(|g| format!("{} (alpha = {:?})", g.expr(), g.growth_exponent))
                    .unwrap_or_else(|| "none".into())
            ),
            Problem::Radial(p) => format!(
                "radial n = {}; a = {}; f = {}; modes = {:?}",
                p.dimension,
                p.a,
                p.f,
                p.modes.iter().map(|m| m.nu).collect::<Vec<_>>()
            ),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub code: &'static str,
    pub passed: bool,
    /// Sample points (or mode indices) where the check failed.
    pub offending: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_error(&self) -> Option<Error> {
        let c = self.checks.iter().find(|c| !c.passed)?;
        let count = c.offending.len();
        let first = c.offending.first().copied().unwrap_or(f64::NAN);
        Some(match c.code {
            "ELLIPTICITY_VIOLATION" => Error::EllipticityViolation { count, first },
            "TRIVIAL_BRANCH_VIOLATION" => Error::TrivialBranchViolation { count, first },
            "LINEARIZATION_MISMATCH" => Error::LinearizationMismatch { count, first },
            "COEFFICIENT_EVALUATION_FAILURE" => {
                Error::CoefficientEvaluationFailure(format!("{} non-finite sample(s), first at x = {first}", count))
            }
            _ => Error::Config(format!("{}: failed at {count} point(s)", c.name)),
        })
    }

    pub fn into_result(self) -> Result<Self> {
        match self.first_error() {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            write!(f, "{status:4}  {:<28}", c.name)?;
            if !c.passed {
                let shown: Vec<String> = c.offending.iter().take(5).map(|x| format!("{x}")).collect();
                write!(f, "  {} ({} offending: {}", c.code, c.offending.len(), shown.join(", "))?;
                if c.offending.len() > 5 {
                    write!(f, ", ...")?;
                }
                write!(f, ")")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn sample_points() -> impl Iterator<Item = f64> {
    let step = 1.0 / (VALIDATION_SAMPLES - 1) as f64;
    (0..VALIDATION_SAMPLES).map(move |k| k as f64 * step)
}

fn check(name: &'static str, code: &'static str, bad: impl Fn(f64) -> bool) -> CheckOutcome {
    let offending: Vec<f64> = sample_points().filter(|&x| bad(x)).collect();
    CheckOutcome { name, code, passed: offending.is_empty(), offending }
}

/// Checks every pointwise invariant on a dense uniform sample of [0, 1].
pub fn validate(problem: &Problem) -> ValidationReport {
    let a = problem.a();
    let f = problem.f();
    let mut checks = vec![
        check("finite coefficients", "COEFFICIENT_EVALUATION_FAILURE", |x| {
            !a.value(x).is_finite() || !f.value(x).is_finite()
        }),
        check("ellipticity a > 0", "ELLIPTICITY_VIOLATION", |x| !(a.value(x) > 0.0)),
    ];

    if let Some(g) = problem.nonlinearity() {
        checks.push(check("g(x, 0) = 0", "TRIVIAL_BRANCH_VIOLATION", |x| g.g(x, 0.0).abs() > 1e-12));
        checks.push(check("f = dg/dxi(x, 0)", "LINEARIZATION_MISMATCH", |x| {
            let lin = g.dg_dxi(x, 0.0);
            let declared = f.value(x);
            let scale = lin.abs().max(declared.abs()).max(1e-14);
            !((lin - declared).abs() <= 1e-10 * scale)
        }));
    }

    if let Problem::Radial(p) = problem {
        let mut offending = Vec::new();
        if p.dimension < 2 {
            offending.push(p.dimension as f64);
        }
        for (i, m) in p.modes.iter().enumerate() {
            let expected = harmonic_multiplicity(m.nu, p.dimension.max(2));
            let increasing = i == 0 || p.modes[i - 1].nu < m.nu;
            if !increasing || m.multiplicity_weight != expected {
                offending.push(m.nu as f64);
            }
        }
        checks.push(CheckOutcome { name: "mode list", code: "CONFIG_ERROR", passed: offending.is_empty(), offending });
    }
    ValidationReport { checks }
}
