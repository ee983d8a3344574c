use thiserror::Error;

/// Every failure the library can report. Each variant carries a stable
/// symbolic code (see [`Error::code`]) that the CLI prints verbatim.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("diffusion coefficient is not positive at {} sample(s), first at x = {first}", .count)]
    EllipticityViolation { count: usize, first: f64 },
    #[error("g(x, 0) != 0 at {count} sample(s), first at x = {first}")]
    TrivialBranchViolation { count: usize, first: f64 },
    #[error("declared f disagrees with dg/dxi(x, 0) at {count} sample(s), first at x = {first}")]
    LinearizationMismatch { count: usize, first: f64 },
    #[error("parameter r = {0} is outside (0, 1]")]
    ParameterOutOfRange(f64),
    #[error("coefficient evaluation produced a non-finite value: {0}")]
    CoefficientEvaluationFailure(String),
    #[error("derivative of coefficient '{0}' is unavailable (declared C0)")]
    DerivativeUnavailable(String),
    #[error("symmetric indefinite factorization broke down at shift {0}")]
    InertiaBreakdown(f64),
    #[error("radial mode list still contributes negative eigenvalues at nu = {0}")]
    ModeOverflow(usize),
    #[error("inverse iteration did not converge for eigenvalue {0}")]
    EigensolverStagnation(f64),
    #[error("kernel is empty at r = {0}")]
    NoCrossing(f64),
    #[error("crossing form has a non-negative eigenvalue {eigenvalue} at r = {r0}")]
    TheoremViolation { r0: f64, eigenvalue: f64 },
    #[error("kernel at r = 1 is nontrivial (dimension {0})")]
    M1Nonzero(usize),
    #[error("unresolved crossing cluster in [{lo}, {hi}]")]
    BracketAmbiguous { lo: f64, hi: f64 },
    #[error("Morse index {lhs} != sum of multiplicities {rhs}")]
    SmaleViolation { lhs: usize, rhs: usize, profile: Vec<(f64, usize)> },
    #[error("Morse-index jump {lhs} != signature sum {rhs} on path seed {seed}")]
    MorseJumpViolation { seed: u64, lhs: i64, rhs: i64 },
    #[error("path is singular at endpoint {0}")]
    EndpointSingular(f64),
    #[error("degenerate crossing at {0}")]
    DegenerateCrossing(f64),
    #[error("no isolation radius above 1e-4 verified at {0}")]
    IsolationUnverified(f64),
    #[error("shooting solution blew up at x = {0}")]
    ShootBlowup(f64),
    #[error("branch radius {0} does not accumulate at any conjugate instant")]
    ConverseViolation(f64),
    #[error("{0}")]
    Config(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::EllipticityViolation { .. } => "ELLIPTICITY_VIOLATION",
            Error::TrivialBranchViolation { .. } => "TRIVIAL_BRANCH_VIOLATION",
            Error::LinearizationMismatch { .. } => "LINEARIZATION_MISMATCH",
            Error::ParameterOutOfRange(_) => "PARAMETER_OUT_OF_RANGE",
            Error::CoefficientEvaluationFailure(_) => "COEFFICIENT_EVALUATION_FAILURE",
            Error::DerivativeUnavailable(_) => "DERIVATIVE_UNAVAILABLE",
            Error::InertiaBreakdown(_) => "INERTIA_BREAKDOWN",
            Error::ModeOverflow(_) => "MODE_OVERFLOW",
            Error::EigensolverStagnation(_) => "EIGENSOLVER_STAGNATION",
            Error::NoCrossing(_) => "NO_CROSSING",
            Error::TheoremViolation { .. } => "THEOREM_VIOLATION",
            Error::M1Nonzero(_) => "M1_NONZERO",
            Error::BracketAmbiguous { .. } => "BRACKET_AMBIGUOUS",
            Error::SmaleViolation { .. } => "SMALE_VIOLATION",
            Error::MorseJumpViolation { .. } => "MORSE_JUMP_VIOLATION",
            Error::EndpointSingular(_) => "ENDPOINT_SINGULAR",
            Error::DegenerateCrossing(_) => "DEGENERATE_CROSSING",
            Error::IsolationUnverified(_) => "ISOLATION_UNVERIFIED",
            Error::ShootBlowup(_) => "SHOOT_BLOWUP",
            Error::ConverseViolation(_) => "CONVERSE_VIOLATION",
            Error::Config(_) => "CONFIG_ERROR",
        }
    }

    /// Violations of a mathematical identity, as opposed to misuse or
    /// numerical trouble.
    pub fn is_identity_violation(&self) -> bool {
        matches!(
            self,
            Error::TheoremViolation { .. }
                | Error::SmaleViolation { .. }
                | Error::ConverseViolation(_)
                | Error::MorseJumpViolation { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
