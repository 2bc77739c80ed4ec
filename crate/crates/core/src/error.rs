use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid detector placement or shape.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    /// Quadrature could not reach its tolerance.
    #[error("integration error in {what}: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    Integration {
        what: String,
        estimate: f64,
        tolerance: f64,
    },

    /// A semi-infinite time integral hit its cap before the tail criterion held.
    #[error("{what} did not converge before t = {t_max} (value {value:e}, error {estimate:e})")]
    NonConverged {
        what: String,
        value: f64,
        estimate: f64,
        t_max: f64,
    },

    /// A discretization would exceed the memory budget.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
}
