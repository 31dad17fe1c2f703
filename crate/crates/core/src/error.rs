use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A point lies too far from the chart base for its Euclidean lift to be
    /// well defined.
    #[error("chart overflow: distance {distance} is not below the injectivity radius {limit}")]
    ChartOverflow { distance: f64, limit: f64 },

    /// A construction radius is too large for chart-based geometry.
    #[error("radius too large for chart: 2r = {diameter} must be below the injectivity radius {limit}")]
    RadiusTooLarge { diameter: f64, limit: f64 },

    /// A radius coincides with a critical value, so the sublevel set is not
    /// generic.
    #[error("non-generic radius: critical value {critical} coincides with r = {radius}")]
    NonGenericRadius { radius: f64, critical: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    /// An internal consistency check failed.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
