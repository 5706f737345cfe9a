use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The iteration budget ran out. `best` is the best iterate seen: joint
    /// angles (rad) for equilibrium solves, stiffnesses (N·m/rad) for fits.
    #[error("no convergence after {iterations} iterations (residual norm {residual_norm:.3e})")]
    Convergence {
        iterations: usize,
        residual_norm: f64,
        best: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ramp step {index} (f_in = {f_in} N): {source}")]
    Ramp {
        index: usize,
        f_in: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("finger {finger}: {source}")]
    Finger {
        finger: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Strips `Ramp`/`Finger` context and returns the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Ramp { source, .. } | Error::Finger { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_convergence(&self) -> bool {
        matches!(self.root(), Error::Convergence { .. } | Error::Numerical(_))
    }
}
