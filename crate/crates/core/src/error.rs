use crate::model::region::Site;
use thiserror::Error;

/// Errors raised by model construction, simulation and the numerical checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("boundary shell incomplete: no value for site {0}")]
    BoundaryIncomplete(Site),

    #[error("site {0} outside the region")]
    SiteOutsideRegion(Site),

    #[error("site {0} outside the boundary shell")]
    SiteOutsideShell(Site),

    #[error("non-finite value in {context} (got {value})")]
    NonFinite { context: String, value: f64 },

    #[error("configuration defined on a different region")]
    RegionMismatch,

    #[error("geometry infeasible at level {k}: {reason}")]
    GeometryInfeasible { k: u32, reason: String },

    #[error("truncation too small: tail mass bound {tail:.3e} exceeds tolerance {tol:.3e}")]
    TruncationTooSmall { tail: f64, tol: f64 },

    #[error("region too large for quadrature: {size} sites (limit {limit})")]
    RegionTooLarge { size: usize, limit: usize },

    #[error("observable supports overlap")]
    OverlappingSupports,

    #[error("coupling broken: {0}")]
    CouplingBroken(String),

    #[error("trajectory diverged at site {site} step {step}: {value}")]
    Diverged { site: Site, step: u64, value: f64 },

    #[error("non-positive variance inside the fit window (noise floor reached)")]
    NoiseFloor,

    #[error("not enough data points: need {need}, have {have}")]
    NotEnoughData { need: usize, have: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
