use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates an operation's precondition (shape, symmetry, range).
    #[error("domain error: {0}")]
    Domain(String),

    /// Orthonormalisation met a (numerically) rank-deficient set of columns.
    #[error("degenerate step: {0}")]
    DegenerateStep(String),

    #[error("polygon cannot close: largest length {largest} exceeds the sum of the others {rest}")]
    Infeasible { largest: f64, rest: f64 },

    /// A single-pair decomposition was requested for a pair with `a^r > 0`.
    #[error("pair {pair} violates the spectral criterion (a = {a_value:e})")]
    CriterionFailure { pair: usize, a_value: f64 },

    #[error(
        "ensemble member {index} is not a product state (relative second singular value {ratio:e})"
    )]
    NotProduct { index: usize, ratio: f64 },

    #[error("certificate reproduces the state only to {error:e}")]
    Reconstruction { error: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
