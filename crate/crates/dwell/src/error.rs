//! Crate error type.

/// Errors surfaced by the simulation layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A λ-wide cell does not contain exactly two local minima separated by
    /// an internal barrier (e.g. Z_f at which the double well merges).
    #[error("degenerate well structure: {0}")]
    DegenerateWell(String),

    /// Grid domain incompatible with the lattice or the transform.
    #[error("bad domain: {0}")]
    BadDomain(String),

    /// The underlying symmetric eigensolver failed.
    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),

    /// An expectation value that must be real came out complex.
    #[error("non-hermitian residual: |imaginary part| = {0:e} exceeds 1e-8")]
    NonHermitianResidual(f64),

    /// Gaussian projection onto the requested levels left too much weight
    /// outside them.
    #[error("poor overlap: projection residual {0:e} exceeds 0.05")]
    PoorOverlap(f64),

    /// Config text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Config parsed but violates an invariant.
    #[error("validation error: {field}: {msg}")]
    Validation { field: String, msg: String },

    /// Unknown preset identifier.
    #[error("unknown preset: {0} (expected fig1, fig2, fig3a, fig3b, fig4a, fig4b, fig5a, fig5b, fig6, fig7, fig8a, fig8b, fig9a or fig9b)")]
    UnknownPreset(String),

    /// I/O failure with path context.
    #[error("io error ({path}): {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(field: &str, msg: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            msg: msg.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
