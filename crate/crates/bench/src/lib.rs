//! Fixtures shared by the benchmarks.

use htspec::experiments::default_law;
use htspec::{sample_matrix, EnsembleSpec, Shape, SparseMatrix, SparsitySpec};

/// Square rectangular-ensemble matrix with `n^(1 + mu)` expected nonzeros.
pub fn covariance_matrix(alpha: f64, mu: f64, n: usize, seed: u64) -> SparseMatrix {
    sample_matrix(&covariance_spec(alpha, mu, n, seed)).expect("valid fixture")
}

pub fn covariance_spec(alpha: f64, mu: f64, n: usize, seed: u64) -> EnsembleSpec {
    EnsembleSpec {
        shape: Shape::Rectangular { n, rho: 1.0 },
        law: default_law(alpha).expect("valid alpha"),
        sparsity: SparsitySpec::bernoulli(mu),
        seed,
    }
}

pub fn hermitian_matrix(alpha: f64, mu: f64, n: usize, seed: u64) -> SparseMatrix {
    let spec = EnsembleSpec {
        shape: Shape::Hermitian { n },
        law: default_law(alpha).expect("valid alpha"),
        sparsity: SparsitySpec::bernoulli(mu),
        seed,
    };
    sample_matrix(&spec).expect("valid fixture")
}
