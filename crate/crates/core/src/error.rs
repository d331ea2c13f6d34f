use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} outside 1..=30")]
    InvalidDimension(u32),
    #[error("edge (base {base:#b}, dir {dir}) does not belong to Q_{d}")]
    DimensionMismatch { base: u32, dir: u32, d: u32 },
    #[error("edge base {base:#b} has direction bit {dir} set")]
    NonCanonicalEdge { base: u32, dir: u32 },
    #[error("edge index {idx} out of range for Q_{d}")]
    IndexOutOfRange { idx: u64, d: u32 },
    #[error("vertices {0:#b} and {1:#b} are not adjacent")]
    NotAdjacent(u32, u32),
    #[error("clock assignment has {got} entries, expected {expected}")]
    ClockLength { got: usize, expected: u64 },
    #[error("clock value {0} is not in [0, 1]")]
    ClockRange(f64),
    #[error("Q_{0} is too large to simulate in memory")]
    TooLarge(u32),
    #[error("exhaustive computation refused for d = {d} (limit {limit})")]
    OracleRefused { d: u32, limit: u32 },
    #[error("quadrature failed to reach tolerance {tol:e} (estimate {estimate}, error {error:e})")]
    Quadrature { tol: f64, estimate: f64, error: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ODE singularity: q = {q} at t = {t}")]
    Singularity { t: f64, q: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
