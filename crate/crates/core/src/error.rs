use std::path::PathBuf;

/// Errors raised by the geometry kernels, model, data loaders and training loop.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate reflector: |<u,u>_w| = {self_inner:e} is below the isotropy threshold")]
    DegenerateReflector { self_inner: f64 },

    #[error("matrix is not orthogonal for the given form (defect {defect:e})")]
    NotOrthogonal { defect: f64 },

    #[error("unsupported signature: {0}")]
    UnsupportedSignature(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point is off the hyperboloid (relative residual {residual:e})")]
    OffManifold { residual: f64 },

    #[error("{kind} id {id} out of range (size {bound})")]
    IdOutOfRange {
        kind: &'static str,
        id: usize,
        bound: usize,
    },

    #[error("diagnostics unavailable: component dimension {dim} exceeds {max}")]
    DiagnosticsUnavailable { dim: usize, max: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    Numeric(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

#[inline]
pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
