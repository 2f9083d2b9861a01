use alloc::string::String;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Exact scale-constant enumeration would visit too many subset pairs.
    #[error(
        "exact scale constant needs {pairs} subset pairs, above the cap of {cap}; \
         use the heuristic or an upper bound instead"
    )]
    Capacity { pairs: u128, cap: u128 },

    #[error("numerical failure in {context}: {detail}")]
    Numerical {
        context: &'static str,
        detail: String,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    /// A maintained matrix-vector product no longer matches its recomputation.
    #[error(
        "maintained product `{product}` drifted at iteration {iteration}: \
         relative error {relative_error:e}"
    )]
    Consistency {
        product: &'static str,
        iteration: u64,
        relative_error: f64,
    },

    #[error("reference certification failed: best gap {best_gap:e} after {iterations} iterations")]
    CertificationFailed { best_gap: f64, iterations: u64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
