use std::path::PathBuf;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {x} is not periodic with period {period} (tolerance {tol:e})")]
    NotPeriodic { x: f64, period: usize, tol: f64 },

    #[error("orbit degenerated: bin {bin} holds {share:.3} of the mass")]
    DegenerateOrbit { bin: usize, share: f64 },

    #[error("target has zero measure")]
    ZeroMeasureTarget,

    #[error("union balls overlap: centers {a} and {b} with radius {radius}")]
    OverlappingUnion { a: f64, b: f64, radius: f64 },

    #[error("no trial hit the target ({trials} trials, block length {block_length})")]
    AllZero { trials: u64, block_length: u64 },

    #[error("conditional sampler found no point of the target after {attempts} attempts")]
    EmptyConditional { attempts: u64 },

    #[error("alpha sequence increases at index {index}")]
    NotMonotone { index: usize },

    #[error("extremal index is zero")]
    ZeroExtremalIndex,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("run needs about {required:.3e} map evaluations, budget is {budget:.3e}")]
    BudgetExceeded { required: f64, budget: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by a malformed request rather than by the run itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Config(_) | Error::Unknown { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
