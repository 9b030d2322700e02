use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The loading matrix could not be inverted reliably.
    #[error("numerically singular matrix (1-norm condition estimate {condition:e})")]
    NumericallySingular { condition: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    /// `Re(g) <= 0` for element `element`; the phase parametrization of the
    /// reactance update does not exist.
    #[error("change of variables undefined at element {element}: Re(g) = {re_g:e}")]
    ChangeOfVariablesUndefined { element: usize, re_g: f64 },

    #[error("degenerate rank-one update at element {element}: |1 + j dx g| = {denominator:e}")]
    DegenerateUpdate { element: usize, denominator: f64 },

    #[error("singular load: reactance {index} is zero")]
    SingularLoad { index: usize },

    #[error("division by zero at reactance {index}")]
    DivisionByZero { index: usize },

    #[error("spacing {spacing} is below the conditioning guard {guard} (override with allow_small_spacing)")]
    SpacingBelowGuard { spacing: f64, guard: f64 },

    #[error("grid search over {elements} elements refused (limit {limit})")]
    GridTooLarge { elements: usize, limit: usize },
}

impl Error {
    /// Short machine-readable tag, used in CSV flag columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::UnsupportedConfiguration(_) => "unsupported-configuration",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::NumericallySingular { .. } => "numerically-singular",
            Error::NotPsd { .. } => "not-psd",
            Error::NotSymmetric { .. } => "not-symmetric",
            Error::ChangeOfVariablesUndefined { .. } => "change-of-variables-undefined",
            Error::DegenerateUpdate { .. } => "degenerate-update",
            Error::SingularLoad { .. } => "singular-load",
            Error::DivisionByZero { .. } => "division-by-zero",
            Error::SpacingBelowGuard { .. } => "spacing-below-guard",
            Error::GridTooLarge { .. } => "grid-too-large",
        }
    }
}
