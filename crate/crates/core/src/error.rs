use thiserror::Error;

/// Errors produced by the library. Config-level validation collects every
/// violated precondition into a single `Config` variant so a bad run file is
/// diagnosed in one pass.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("matrix is not hermitian within {tol:e} (max residue {residue:e})")]
    NotHermitian { residue: f64, tol: f64 },

    #[error("operation requires spatial dimension 2 or 3, grid has d={0}")]
    DimensionUnsupported(usize),

    #[error("fixed-point iteration did not contract after {iters} iterations (last factor {factor:.3e})")]
    NonContraction { iters: usize, factor: f64 },

    #[error("blow-up guard tripped at t={t}: norm {norm:.3e} exceeds {limit:.3e}")]
    BlowUp { t: f64, norm: f64, limit: f64 },

    #[error("energy drift {drift:.3e} across continuation windows exceeds tolerance {tol:.3e}")]
    EnergyDrift { drift: f64, tol: f64 },

    #[error("inadmissible exponent pair (q={q}, r={r}) for d={d}")]
    InadmissiblePair { q: f64, r: f64, d: usize },

    #[error("configuration errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("container format error: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, Error>;
