use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("nonlinearity exponent p = {0} outside [3, 5]")]
    ExponentOutOfRange(f64),
    #[error("grid too small for causal domain: need extent {needed}, have {have}")]
    CausalMargin { needed: f64, have: f64 },
    #[error("time step {dt} violates CFL bound {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite sample at time {t}")]
    NonFinite { t: f64 },
    #[error("time {t} outside trace window [{first}, {last}]")]
    OutsideWindow { t: f64, first: f64, last: f64 },
    #[error("point (rho = {rho}, z = {z}) outside grid")]
    OutsideGrid { rho: f64, z: f64 },
    #[error("radius {r} below resolution limit {limit}")]
    BelowResolution { r: f64, limit: f64 },
    #[error("backend mismatch: {0}")]
    Backend(String),
    #[error("malformed region: {0}")]
    Region(String),
    #[error("quadrature not converged: relative change {change:.3e} > {tol:.1e}")]
    Quadrature { change: f64, tol: f64 },
    #[error("estimated memory {needed} bytes exceeds budget {budget} bytes")]
    Memory { needed: usize, budget: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
