//! Intrinsic vertex colors from the low end of the Laplace-Beltrami spectrum.
//!
//! The three smallest non-trivial eigenvectors of the cotangent Laplacian are
//! pose-invariant functions on the surface; rescaled to [0, 1] they become an
//! RGB signature that tells body parts apart after projection.

mod cache;
mod cholesky;
mod eigen;
mod laplacian;

use thiserror::Error;

use crate::body_model::PosedMesh;
use crate::format::FormatError;
use crate::mesh::TopologyError;

pub use cache::{decode_eigb, encode_eigb, load_or_compute, mesh_fingerprint, read_eigb, write_eigb, EigenCache, EIGB_MAGIC, EIGB_VERSION};
pub use cholesky::{reverse_cuthill_mckee, EnvelopeCholesky, NotPositiveDefinite};
pub use eigen::{
    normalize_sign, relative_residual, smallest_nontrivial_eigvecs, smallest_nontrivial_eigvecs_with, EigenBasis, EigenDiagnostics,
    MethodChoice, SolverMethod, SolverOptions, DENSE_LIMIT,
};
pub use laplacian::{cotangent_laplacian, SparseSymmetricMatrix, MIN_TRIANGLE_AREA};

#[derive(Debug, Error)]
pub enum IntrinsicError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid mass vector: {0}")]
    InvalidMass(String),
    #[error("requested {requested} non-trivial modes, only {available} available")]
    TooFewModes { requested: usize, available: usize },
    #[error("shifted operator not positive definite at vertex {pivot} (pivot {value:e})")]
    Factorization { pivot: usize, value: f64 },
    #[error("eigensolver did not converge in {iterations} iterations (residual {residual:e}, tolerance {tolerance:e})")]
    NonConvergence { iterations: usize, residual: f64, tolerance: f64 },
    #[error("eigenvector {index} is constant; cannot normalize to a color channel")]
    ConstantEigenvector { index: usize },
    #[error("color map needs exactly 3 eigenvectors, basis has {0}")]
    ChannelCount(usize),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Per-vertex RGB in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicColorMap {
    pub colors: Vec<[f64; 3]>,
}

impl IntrinsicColorMap {
    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.colors.iter().map(|rgb| rgb[c]).collect()
    }
}

/// Sign-normalizes each eigenvector, then min-max scales it into a channel.
pub fn eigvecs_to_colors(basis: &EigenBasis) -> Result<IntrinsicColorMap, IntrinsicError> {
    if basis.eigenvectors.len() != 3 {
        return Err(IntrinsicError::ChannelCount(basis.eigenvectors.len()));
    }
    let n = basis.eigenvectors[0].len();
    let mut colors = vec![[0.0; 3]; n];
    for (c, raw) in basis.eigenvectors.iter().enumerate() {
        let mut v = raw.clone();
        normalize_sign(&mut v);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        if !(range > 0.0) {
            return Err(IntrinsicError::ConstantEigenvector { index: c });
        }
        for (rgb, x) in colors.iter_mut().zip(&v) {
            rgb[c] = ((x - lo) / range).clamp(0.0, 1.0);
        }
    }
    Ok(IntrinsicColorMap { colors })
}

/// Laplacian, three smallest non-trivial modes and their colors in one call.
pub fn intrinsic_colors(mesh: &PosedMesh) -> Result<(EigenBasis, IntrinsicColorMap), IntrinsicError> {
    let (l, mass) = cotangent_laplacian(mesh)?;
    let basis = smallest_nontrivial_eigvecs(&l, &mass, 3)?;
    let colors = eigvecs_to_colors(&basis)?;
    Ok((basis, colors))
}
