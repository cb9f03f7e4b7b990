//! Loschmidt echo of the isotropic XY chain through its unitary and
//! symplectic matrix-model representations.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: Bessel rows, log-polar determinants, root finding, fits.
//! - [`echo`]: exact finite-N amplitudes (Toeplitz and Toeplitz+Hankel),
//!   free energies, impurity insertions and a brute-force eigenvalue oracle.
//! - [`planar`]: closed-form large-N densities, support contours and
//!   critical times.
//! - [`analysis`]: finite-size error metrics, the odd-N speed limit and
//!   identity checks tying the exact engine to the planar formulas.

// `!(x >= 0.0)` is kept where it must also reject NaN; index loops follow
// the matrix formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod echo;
pub mod numerics;
pub mod planar;

pub use echo::{AmplitudeResult, Boundary, ChainSpec, Sites, TimeArgument, TimeKind};
pub use numerics::LogPolarAmplitude;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid chain: {0}")]
    InvalidSpec(String),
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("no sign change on [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("{module}: {message}")]
    Domain { module: &'static str, message: String },
}

impl Error {
    pub(crate) fn domain(module: &'static str, message: impl Into<String>) -> Self {
        Error::Domain { module, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
