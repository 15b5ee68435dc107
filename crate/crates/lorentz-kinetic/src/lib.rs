//! Kinetic-scaling machinery for the periodic quantum Lorentz gas.
//!
//! The crate follows a wavefunction on `R^d` with a `Z^d`-periodic potential
//! through its Bloch–Floquet–Zak fibers, builds the Bloch–Wigner field and the
//! rescaled co-moving field `T^ε`, and provides the adjoint driver operators,
//! small-divisor diagnostics, the graded scale `E_m`, the limiting linear
//! Boltzmann evolution and the resonant-set observable layer.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise.

pub mod error;
pub mod numeric;
pub mod par;

pub mod bfz;
pub mod boltzmann;
pub mod divisors;
pub mod drivers;
pub mod dynamics;
pub mod field;
pub mod lattice;
pub mod report;
pub mod resonance;
pub mod scale;
pub mod wigner;

pub use error::{Error, Result};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use num_complex::Complex64;
