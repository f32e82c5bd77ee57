use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("shape mismatch: expected {expected} points per axis, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("time-derivative depth {requested} exceeds available depth {available}")]
    InsufficientDepth { requested: usize, available: usize },
    #[error("closure order {k} outside allowed range 2..={k_max}")]
    ClosureOrder { k: usize, k_max: usize },
    #[error("multi-index size {size} exceeds cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("polynomial degree {degree} exceeds bound {bound}")]
    DegreeOverflow { degree: u32, bound: u32 },
    #[error("point outside chart domain: {0}")]
    OffChart(String),
    #[error("evaluation inside the excluded disk r < r_min")]
    InsideExclusion,
    #[error("hyperboloid parameter rho^2 = {rho2} outside admissible band [{lo}, {hi})")]
    RhoOutOfBand { rho2: f64, lo: f64, hi: f64 },
    #[error("sample window [{have_lo}, {have_hi}] does not cover [{need_lo}, {need_hi}]")]
    WindowNotCovered { have_lo: f64, have_hi: f64, need_lo: f64, need_hi: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Picard iteration did not converge in {} iterations (difference history {:?})", history.len(), history)]
    NoConvergence { history: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
