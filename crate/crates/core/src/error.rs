use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("aliasing tail {tail:.3e} exceeds bound {bound:.3e} ({context})")]
    Aliasing {
        tail: f64,
        bound: f64,
        context: String,
    },

    #[error("map is not orientation preserving: min derivative {min_derivative:.3e}")]
    NonMonotone { min_derivative: f64 },

    #[error("iteration did not converge: {0}")]
    Convergence(String),

    #[error("heat semigroup truncated: exp(-t lambda_max^2) = {weight:.3e} at t = {t:.3e}")]
    Truncation { t: f64, weight: f64 },

    #[error("spectrum too degenerate for a decay fit: {nonzero} nonzero singular values")]
    DegenerateSpectrum { nonzero: usize },

    #[error("heat fit ill-conditioned: condition number {condition:.3e} > {bound:.3e}")]
    IllConditionedFit { condition: f64, bound: f64 },

    #[error("residue unreliable: fit residual {residual:.3e} > {bound:.3e}")]
    UnreliableResidue { residual: f64, bound: f64 },

    #[error("algebra has no unit")]
    NotUnital,

    #[error("map is not a derivation on the samples: defect {defect:.3e}")]
    NotDerivation { defect: f64 },

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("pair is not localized: total word {word} is not the identity")]
    Localization { word: String },

    #[error("matrix is not self-adjoint: defect {defect:.3e}")]
    NotSelfAdjoint { defect: f64 },

    #[error("grading violated: {0}")]
    Grading(String),

    #[error("Dirac operator is singular: smallest singular value {smallest:.3e}")]
    SingularD { smallest: f64 },

    #[error("element is not idempotent: defect {defect:.3e}")]
    NotIdempotent { defect: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown expression `{0}`")]
    UnknownExpression(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
