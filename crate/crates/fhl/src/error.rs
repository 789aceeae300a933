use thiserror::Error;

/// Failures raised by the numerical modules.
///
/// Variants split into validation problems (bad inputs, unsupported requests)
/// and numerical failures (quadrature, extrapolation, iteration); see
/// [`Error::is_numerical`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("gamma requires a positive argument, got {0}")]
    NonPositiveArgument(f64),
    #[error("integral diverges: {0}")]
    DivergentIntegral(String),
    #[error("constant {0} is not defined for these parameters")]
    UnsupportedKind(String),
    #[error("Kelvin transform evaluated at the origin")]
    EvaluationAtOrigin,
    #[error("quadrature did not reach tolerance (estimated error {estimate:e}, value {value:e})")]
    QuadratureFailure { value: f64, estimate: f64 },
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("no grid points inside the window |x| <= {0}")]
    EmptyWindow(f64),
    #[error("kernel |x|^-{mu} is not locally integrable in dimension {n}")]
    KernelNotIntegrable { mu: f64, n: usize },
    #[error("field grid does not match the operator grid")]
    GridMismatch,
    #[error("grid too large for dense weights: {0}")]
    TooLarge(String),
    #[error("radial profile decays too slowly: {0}")]
    DivergentTail(String),
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("Green function evaluated on the diagonal; use the Robin function")]
    DiagonalEvaluation,
    #[error("Richardson extrapolation diverged (spread {spread:e})")]
    ExtrapolationDiverged { spread: f64 },
    #[error("no interior critical point in the sampled data")]
    NoCriticalPoint,
    #[error("eps = {eps} is within 1e-10 of the eigenvalue power lambda_{k}^s")]
    ResonantEps { eps: f64, k: usize },
    #[error("robin value required for the rate law")]
    MissingRobin,
    #[error("sample point {0:?} is closer than four grid cells to x0")]
    SampleTooClose(Vec<f64>),
    #[error("interior set M(Omega, r) is empty")]
    EmptyInterior,
    #[error("strip radius {0} leaves an empty strip or interior")]
    DegenerateStrip(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("iteration failed to converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("positivity lost at iteration {iteration} (min interior value {min:e})")]
    PositivityLost { iteration: usize, min: f64 },
    #[error("the field vanishes identically")]
    ZeroField,
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical method, false for rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. }
                | Error::DivergentTail(_)
                | Error::ExtrapolationDiverged { .. }
                | Error::NoCriticalPoint
                | Error::NoConvergence { .. }
                | Error::PositivityLost { .. }
        )
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfRange(_) => "OutOfRange",
            Error::NonPositiveArgument(_) => "NonPositiveArgument",
            Error::DivergentIntegral(_) => "DivergentIntegral",
            Error::UnsupportedKind(_) => "UnsupportedKind",
            Error::EvaluationAtOrigin => "EvaluationAtOrigin",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::DegenerateScale(_) => "DegenerateScale",
            Error::EmptyWindow(_) => "EmptyWindow",
            Error::KernelNotIntegrable { .. } => "KernelNotIntegrable",
            Error::GridMismatch => "GridMismatch",
            Error::TooLarge(_) => "TooLarge",
            Error::DivergentTail(_) => "DivergentTail",
            Error::UnderResolved(_) => "UnderResolved",
            Error::DiagonalEvaluation => "DiagonalEvaluation",
            Error::ExtrapolationDiverged { .. } => "ExtrapolationDiverged",
            Error::NoCriticalPoint => "NoCriticalPoint",
            Error::ResonantEps { .. } => "ResonantEps",
            Error::MissingRobin => "MissingRobin",
            Error::SampleTooClose(_) => "SampleTooClose",
            Error::EmptyInterior => "EmptyInterior",
            Error::DegenerateStrip(_) => "DegenerateStrip",
            Error::Precondition(_) => "Precondition",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::PositivityLost { .. } => "PositivityLost",
            Error::ZeroField => "ZeroField",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
