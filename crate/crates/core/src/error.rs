use thiserror::Error;

/// Errors produced by the solvers, the simulator and the file readers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("density {density} outside [0, {rho_max}]")]
    DensityOutOfRange { density: f64, rho_max: f64 },

    #[error("speed {speed} exceeds free-flow speed {free_speed} for property {property}")]
    InfeasibleSpeed { speed: f64, property: f64, free_speed: f64 },

    #[error("link is empty; net property undefined")]
    EmptyLink,

    #[error("density inversion did not converge (speed {speed}, property {property})")]
    Inversion { speed: f64, property: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("node solver exceeded {limit} iterations (k = {iteration}, t = {time})")]
    NonTermination { limit: usize, iteration: usize, time: f64 },

    #[error("numerical failure at iteration {iteration}: {source}")]
    Numerical {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("time step {dt} violates the CFL bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{entity}: {message}")]
    Semantic { entity: String, message: String },

    #[error("trace required for second-order check")]
    TraceRequired,

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn semantic(entity: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Semantic {
            entity: entity.into(),
            message: msg.into(),
        }
    }

    /// True for errors that come from numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Inversion { .. } | Error::NonTermination { .. } | Error::Numerical { .. }
        )
    }

    /// True for file-system failures.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
