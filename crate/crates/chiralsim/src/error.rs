//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rotational constants: {0}")]
    InvalidConstants(String),

    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("control Hamiltonian is empty: {0}")]
    EmptyControl(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("pathway search order {0} exceeds the supported bound of {1}")]
    OrderBound(usize, usize),

    #[error("norm drift {drift:.3e} at t = {t:.4} t0 exceeds 1e-8; integration aborted")]
    NormDrift { t: f64, drift: f64 },

    #[error("pulse calibration failed: {0}")]
    Calibration(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
