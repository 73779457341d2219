use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("profile exponent must exceed 1, got {0}")]
    Exponent(f64),
    #[error("profile peak location must be positive, got {0}")]
    PeakLocation(f64),
    #[error("peak tangential speed must be positive, got {0}")]
    PeakSpeed(f64),
    #[error("invalid domain: {0}")]
    Domain(&'static str),
    #[error("invalid grid: {0}")]
    Grid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("observation {index} is invalid: {reason}")]
    BadObservation { index: usize, reason: &'static str },
    #[error("observations are collinear in the (r, z) plane; the fit is rank deficient")]
    RankDeficient,
    #[error("initial guess parameter {name} = {value} lies outside [{lo}, {hi}]")]
    InitialOutOfBounds { name: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("bounds for {0} are empty or invalid")]
    Bounds(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("start point ({r}, {z}) lies on or outside the domain boundary")]
    StartOutside { r: f64, z: f64 },
    #[error("start point lies within 1e-6 of the circulation maximum, where the field stagnates")]
    AtCriticalPoint,
    #[error("step must be positive, got {0}")]
    Step(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("MOH line coincides with vertical profile maximum; η vanishes identically")]
    MohAtProfileMaximum,
    #[error("observed radial velocity must vanish on the axis, got u(0) = {0}")]
    AxisInflow(f64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("bisection requires zero viscosity; use characteristic tracing for ν > 0")]
    ViscousBisection,
    #[error("void map and field grids differ")]
    GridMismatch,
    #[error("need at least {0} quadrature panels")]
    Quadrature(usize),
}

/// Pipeline-level error carrying the failing stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("fit: {0}")]
    Fit(#[from] FitError),
    #[error("tracing: {0}")]
    Trace(#[from] TraceError),
    #[error("retrieval: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("ensemble: {0}")]
    Ensemble(String),
}
