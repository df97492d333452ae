//! Sparse heavy-tailed random matrices: sampling, extreme eigenpairs,
//! limit laws and the checks that tie them together.

pub mod dense;
pub mod error;
pub mod experiments;
pub mod limits;
pub mod localization;
pub mod matrix;
mod quad;
pub mod sampling;
pub mod seed;
pub mod spectral;
pub mod stats;
pub mod verify;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use limits::{IntensityKind, Regime, RegimeParams};
pub use matrix::{RankedEntry, SparseMatrix, TopEntries, TruncationSplit};
pub use sampling::{sample_matrix, EnsembleSpec, Shape, SlowlyVarying, SparsityKind, SparsitySpec, TailLaw};
pub use seed::derive_replicate_seed;
pub use spectral::{LanczosOptions, Solver, SpectralResult};
