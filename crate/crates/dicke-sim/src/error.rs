use crate::hilbert::HilbertLayout;

/// Errors produced by constructors, dynamics, and the CLI layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("layout mismatch: expected {expected:?}, found {found:?}")]
    LayoutMismatch {
        expected: HilbertLayout,
        found: HilbertLayout,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate rotating frame: omega_x equals omega_r")]
    DegenerateFrame,

    #[error("closed-form propagator requires zero effective splitting, got {0:.6e} rad/ns")]
    NonzeroSplitting(f64),

    #[error("Fock truncation insufficient: {0}")]
    Truncation(String),

    #[error("accuracy budget unsatisfiable: {0}")]
    AccuracyBudget(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("drive regime violated: {0}")]
    Regime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
