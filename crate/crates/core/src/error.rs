use thiserror::Error;

use crate::ifs::SlopeInterval;

pub type Result<T, E = IfsError> = std::result::Result<T, E>;

/// Why two maps (or two IFSs) cannot be conjugated by any homeomorphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Obstruction {
    /// One map preserves orientation, the other reverses it.
    OrientationMismatch,
    /// One map attracts to the origin, the other repels.
    AttractRepelMismatch,
    /// Both of the above at once.
    OrientationAndAttractRepel,
}

impl Obstruction {
    pub fn between(a: SlopeInterval, b: SlopeInterval) -> Option<Self> {
        let orientation = a.is_orientation_preserving() != b.is_orientation_preserving();
        let attraction = a.is_contracting() != b.is_contracting();
        match (orientation, attraction) {
            (true, true) => Some(Obstruction::OrientationAndAttractRepel),
            (true, false) => Some(Obstruction::OrientationMismatch),
            (false, true) => Some(Obstruction::AttractRepelMismatch),
            (false, false) => None,
        }
    }
}

impl std::fmt::Display for Obstruction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Obstruction::OrientationMismatch => "orientation mismatch",
            Obstruction::AttractRepelMismatch => "attract/repel mismatch",
            Obstruction::OrientationAndAttractRepel => "orientation and attract/repel mismatch",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IfsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("orbit left the domain at step {step} (value {value})")]
    DomainEscape { step: usize, value: f64 },

    #[error("unsupported map: {0}")]
    UnsupportedMap(String),

    #[error("symbol {symbol} at position {position} is outside the alphabet 1..={alphabet}")]
    SymbolOutOfRange {
        symbol: usize,
        position: usize,
        alphabet: usize,
    },

    #[error("explicit sequence has {available} symbols, {requested} requested")]
    SequenceExhausted { available: usize, requested: usize },

    #[error("slope {slope} lies on the boundary |s| in {{0, 1}}")]
    BoundarySlope { slope: f64 },

    #[error("not conjugate ({obstruction}): {left} vs {right}")]
    NonConjugate {
        obstruction: Obstruction,
        left: String,
        right: String,
    },

    #[error("fixed point is not hyperbolic: |derivative| = {derivative_abs} at {point}")]
    NonHyperbolic { point: f64, derivative_abs: f64 },

    #[error("origin is not fixed by map {index}: f(0) = {value}")]
    NotAFixedPoint { index: usize, value: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("wrong case: {0}")]
    WrongCase(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("convergence failure: last successive difference {residual:e} after {depth} iterations")]
    ConvergenceFailure { residual: f64, depth: usize },

    #[error("value {0} is outside the image of the homeomorphism")]
    OutOfRange(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("map {index} is not invertible on the working interval")]
    NotInvertible { index: usize },

    #[error("map {index} has a continuum of fixed points near {near}")]
    ContinuumOfFixedPoints { index: usize, near: f64 },

    #[error("map {index} is not contractive (Lipschitz estimate {estimate})")]
    NotContractive { index: usize, estimate: f64 },

    #[error("could not generate an admissible perturbation after {attempts} attempts")]
    Generation { attempts: usize },

    #[error("affine maps are only admitted for attractor sampling")]
    AffineNotAllowed,

    #[error("config error: {0}")]
    Config(String),
}

impl IfsError {
    /// True for verified mathematical obstructions as opposed to usage or numeric trouble.
    pub fn is_obstruction(&self) -> bool {
        matches!(
            self,
            IfsError::NonConjugate { .. }
                | IfsError::NonHyperbolic { .. }
                | IfsError::BoundarySlope { .. }
                | IfsError::ContinuumOfFixedPoints { .. }
        )
    }
}
