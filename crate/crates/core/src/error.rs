use std::path::PathBuf;

/// Errors raised by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("invalid frame geometry: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("path set is empty")]
    EmptyPathSet,

    #[error("dense matrix of order {order} exceeds the materialization guard ({limit})")]
    TooLarge { order: usize, limit: usize },

    #[error("pilot position ({m}, {n}) lies outside the {rows}x{cols} grid")]
    PilotOutOfGrid { m: usize, n: usize, rows: usize, cols: usize },

    #[error("path delay {delay_us:.4} us exceeds the delay guard of {guard_us:.4} us")]
    DelayExceedsGuard { delay_us: f64, guard_us: f64 },

    #[error("cyclic prefix length {cp_len} out of range for a frame of {len} samples")]
    CyclicPrefix { cp_len: usize, len: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error(
        "IMFC diverged at iteration {iteration}: residual norm {residual:.3e} exceeds 10x the \
         observation norm {observation:.3e} (alpha = {alpha:.3e}); use a smaller alpha0 or safe mode"
    )]
    Divergence { iteration: usize, residual: f64, observation: f64, alpha: f64 },

    #[error("path-count source is `fnn` but no model was supplied")]
    MissingModel,

    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("file {path}: {source}")]
    File { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value })
    }
}
