//! Error type shared by every module.

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Two grids or layouts that must agree do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// The wavefunction grid does not fit the unit cell.
    #[error("incommensurate grids: {0}")]
    Incommensurate(String),
    /// The offset η does not place η ± θ on the quasimomentum grid.
    #[error("eta {0:?} is off the half-grid of the quasimomentum grid")]
    OffHalfGrid(Vec<f64>),
    /// The offset used for reconstruction differs from the one of the field.
    #[error("eta mismatch: field built with {field:?}, momentum splits to {requested:?}")]
    EtaMismatch {
        field: Vec<f64>,
        requested: Vec<f64>,
    },
    /// Evaluation point not available in the sampled field.
    #[error("sample not available: {0}")]
    MissingSample(String),
    /// A coefficient set that should describe a real function does not.
    #[error("non-Hermitian coefficient set, imaginary residue {0:e}")]
    NonHermitian(f64),
    /// A collision denominator vanishes for the given indices.
    #[error("resonant denominator at n = {n:?}, xi = {xi:?}, 2*kappa = {kappa2:?}")]
    Resonant {
        n: Vec<i64>,
        xi: Vec<i64>,
        kappa2: Vec<i64>,
    },
    /// A test field is not certified for the requested number of derivatives.
    #[error("insufficient smoothness: order {need} required, field certified for {have}")]
    Smoothness { need: u8, have: u8 },
    /// The explicit collision step exceeds its stability bound.
    #[error("step bound violated: dt * |Y| = {0} exceeds the admissible value")]
    StepBound(f64),
    /// The mollifier support is not resolved by the p grid.
    #[error("mollifier under-resolved: support radius {radius} with grid spacing {spacing}")]
    UnderResolved { radius: f64, spacing: f64 },
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
