use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("could not place UE {ue} at least {min_distance} m from every AN after {attempts} draws")]
    PlacementFailed {
        ue: usize,
        min_distance: f64,
        attempts: usize,
    },

    #[error("distance {distance} m is below the minimum pair distance {min} m")]
    DistanceBelowMinimum { distance: f64, min: f64 },

    #[error("load must be at least one UE")]
    ZeroLoad,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("association is infeasible: AN {an} carries {load} UEs, more than L + 1 = {limit}")]
    Overloaded { an: usize, load: usize, limit: usize },

    #[error("no feasible association exists")]
    Infeasible,

    #[error("solution is not integral: {0}")]
    NotIntegral(String),

    #[error("instance too large to enumerate: {combinations} > limit {limit}")]
    TooLarge { combinations: f64, limit: f64 },

    #[error("incumbent violates the model: {0}")]
    InconsistentIncumbent(String),

    #[error("LP solver failure: {0}")]
    Lp(#[from] crate::solver::lp::LpError),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
