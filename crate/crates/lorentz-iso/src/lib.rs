//! Numerical conformal geometry of spacelike surfaces in the Lorentzian
//! conformal 4-space (the projective light cone of R^6 with signature (4,2)).
//!
//! The crate computes canonical light-cone lifts, conformally invariant moving
//! frames and their invariants (Schwarzian, Hopf differential, normal
//! connection), checks the structure/integrability equations as pointwise
//! residual fields, and implements the three classical transforms of spacelike
//! isothermic surfaces — left/right polar, spectral deformation, and Darboux —
//! together with verification harnesses for their permutability and duality
//! properties.
//!
//! Everything is deterministic: a fixed chart, grid and gauge policy always
//! reproduces bitwise-identical residual summaries.

pub mod conformal_frame;
pub mod grid;
pub mod integrability;
pub mod jet;
pub mod numerics;
pub mod permutability;
pub mod pseudo_euclidean;
pub mod surface_model;
pub mod transforms;

use thiserror::Error;

/// Unified error type for the geometric pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("signature error: {0}")]
    Signature(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("causality error: {0}")]
    Causality(String),
    #[error("conformality error: {0}")]
    Conformality(String),
    #[error("jet order too low: {0}")]
    JetOrder(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate surface: {0}")]
    DegenerateSurface(String),
    #[error("degenerate transform: {0}")]
    DegenerateTransform(String),
    #[error("hypothesis failure: {0}")]
    HypothesisFailure(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Initialize the global rayon thread pool from `LORENTZ_ISO_THREADS`.
///
/// `0` or an unset/unparsable value keeps rayon's automatic sizing. Safe to
/// call more than once; only the first call has an effect.
pub fn init_parallelism() {
    if let Ok(v) = std::env::var("LORENTZ_ISO_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                // Ignore the error if a pool was already installed.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
