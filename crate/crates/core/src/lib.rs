//! Exact-arithmetic toolkit for real hypersurfaces in complex n-space and the
//! CR maps between them.
//!
//! The library works with polynomial defining functions over the Gaussian
//! rationals, treating each conjugate variable as a formal independent slot.
//! On top of that substrate it computes CR vector-field bases, iterated-span
//! nondegeneracy orders, degeneracy determinants and ideals, runs the
//! jet-normalization pipeline for maps into Levi-degenerate targets, and
//! verifies candidate maps against their target surfaces.
//!
//! Everything that can be decided over the rationals is decided exactly; a
//! binary64 backend steps in only where square roots are intrinsic (scaling a
//! transversal jet, congruence-diagonalizing a Hermitian quadric part).

pub mod dsl;
pub mod hypersurface;
pub mod map_check;
pub mod matrix;
pub mod models;
pub mod nondegen;
pub mod normalize;
pub mod poly;
pub mod report;
pub mod scalar;

pub use hypersurface::{CRField, Hypersurface, SurfaceForm, SurfacePoint};
pub use map_check::{MapComponent, MapJet};
pub use poly::{Poly, PolarizedPoly};
pub use scalar::{ComplexDouble, GaussianRational};

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (grammar, unknown names, bad literals).
    #[error("parse error at {line}:{col}: {message}\n{snippet}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
        snippet: String,
    },
    /// Wrong usage of an operation (bad index, wrong form, missing data).
    #[error("{0}")]
    Usage(String),
    /// Input data fails a mathematical precondition.
    #[error("{0}")]
    Validation(String),
    /// A configured combinatorial cap was exceeded.
    #[error("{0}")]
    ResourceCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Arithmetic backend selector for rank and zero decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Exact => write!(f, "exact"),
            Backend::Float => write!(f, "float"),
        }
    }
}

/// Shared knobs: backend, float tolerance, combinatorial caps.
#[derive(Debug, Clone)]
pub struct Settings {
    pub backend: Backend,
    /// Threshold for float-backend rank and zero tests.
    pub tol: f64,
    /// Maximum number of rows a single iterated span may accumulate.
    pub max_span_rows: usize,
    /// Maximum number of generators a degeneracy ideal may accumulate.
    pub max_ideal_generators: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            backend: Backend::Exact,
            tol: 1e-9,
            max_span_rows: 2000,
            max_ideal_generators: 500,
        }
    }
}
