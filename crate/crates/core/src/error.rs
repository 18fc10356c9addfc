use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A hyperbolic factor left the double-precision range.
    #[error("exponential overflow: |alpha*t| = {argument:.3} exceeds the guard {limit}")]
    Overflow { argument: f64, limit: f64 },

    #[error("A, B and [A,B] do not span sl2 (Gram determinant {gram_det:.3e})")]
    DegenerateBasis { gram_det: f64 },

    #[error("trace invariants (a={a}, b={b}, c={c}) fall outside every case: a < 0 requires |c| >= sqrt(ab)")]
    Unclassifiable { a: f64, b: f64, c: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is singular (det = {det:.3e})")]
    SingularMatrix { det: f64 },

    #[error("no singular extremal: (2c - a - b) * tr([A,B]^2) = {product:.6e} is not positive")]
    NoSingular { product: f64 },

    #[error("no switching time: {0}")]
    NoSolution(String),

    #[error("degenerate switching plane: c - b = {gap:.3e}")]
    Degenerate { gap: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("limit check failed: {0}")]
    LimitCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;
