use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("x = {x} lies outside the tabulated range [{min}, {max}]")]
    Domain { x: f64, min: f64, max: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("level {level} of channel sigma={sigma} is not resolved on the grid: {reason}")]
    Truncation { sigma: i8, level: usize, reason: String },

    #[error("discretization failure: {0}")]
    Discretization(String),

    #[error("channel pairing failed: {0}")]
    Pairing(String),

    #[error("propagator pole: |pbar^2 - m^2| = {distance:e}")]
    Pole { distance: f64 },

    #[error("ill-conditioned propagator: p0 = {p0} lies within {distance:e} of the on-shell energy of level {level}")]
    Conditioning { p0: f64, level: usize, distance: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
