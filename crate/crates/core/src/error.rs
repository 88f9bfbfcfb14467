use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infinite slope of the Young function at t = {0}")]
    InfiniteSlope(f64),
    #[error("invalid quasi-Young function: {0}")]
    InvalidYoung(String),
    #[error("evaluation grid [{t_min}, {t_max}] misses the set where 0 < Φ < ∞")]
    GridOutsideFiniteSet { t_min: f64, t_max: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("window is identically zero")]
    ZeroWindow,
    #[error("Luxemburg bracket expansion failed after {0} doublings")]
    BracketExpansion(usize),
    #[error("cube partition misaligned: {0}")]
    MisalignedCubes(String),
    #[error("symbol error: {0}")]
    Symbol(String),
    #[error("empty annulus for R = {0}")]
    EmptyAnnulus(f64),
    #[error("verification error: {0}")]
    Verify(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
