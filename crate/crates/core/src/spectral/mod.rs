//! Eigen-solvers and the exact linear-algebra checks built on them.

mod checks;
mod lanczos;
mod tridiag;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{domain, Result};
use crate::matrix::SparseMatrix;

pub use checks::{
    check_interlacing, check_interlacing_values, localization_bound_check, norm_bounds, perturbation_check,
    principal_subradius, residual_vector, InterlacingMode, InterlacingReport, LocalizationBound, NormBounds, PartB,
    PerturbationCheck, ResidualVector, SubradiusMode, Subradius,
};
pub use lanczos::{lanczos_top, GramOperator, LanczosOptions, SymmetricOperator, SymmetricSparse};

/// Largest dimension accepted by the dense solver.
pub const DEFAULT_DENSE_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Dense,
    Lanczos { iterations: usize, restarts: usize },
}

/// Eigenpairs sorted by decreasing eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Unit vectors; the largest-magnitude coordinate of each is positive.
    pub eigenvectors: Vec<Vec<f64>>,
    pub solver: Solver,
    /// `||A v - lambda v||` per pair.
    pub residual_norms: Vec<f64>,
    /// False when an iterative solve hit its cap (partial result).
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub solver: String,
    pub iterations: usize,
}

impl SpectralResult {
    pub fn is_complete(&self) -> bool {
        matches!(self.solver, Solver::Dense)
    }

    pub fn summary(&self) -> SpectralSummary {
        let (solver, iterations) = match self.solver {
            Solver::Dense => ("dense", 0),
            Solver::Lanczos { iterations, .. } => ("lanczos", iterations),
        };
        SpectralSummary {
            eigenvalues: self.eigenvalues.clone(),
            residuals: self.residual_norms.clone(),
            solver: solver.to_string(),
            iterations,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.summary())?)
    }

    /// Eigenvectors as CSV columns `v1,v2,...`, one coordinate per line.
    pub fn write_eigenvectors_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.eigenvectors.len()).map(|l| format!("v{l}")).collect();
        writeln!(w, "{}", header.join(","))?;
        let dim = self.eigenvectors.first().map_or(0, Vec::len);
        for c in 0..dim {
            let line: Vec<String> = self.eigenvectors.iter().map(|v| format!("{}", v[c])).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Flips `v` so its largest-magnitude coordinate (first on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn check_dense_input(a: &DenseMatrix) -> Result<()> {
    if a.rows() > DEFAULT_DENSE_LIMIT {
        return Err(domain(format!("dense solver limited to dimension {DEFAULT_DENSE_LIMIT}, got {}", a.rows())));
    }
    a.check_symmetric(1e-12)
}

/// Full spectrum by Householder tridiagonalization and implicit-shift QL.
pub fn eig_dense_symmetric(a: &DenseMatrix) -> Result<SpectralResult> {
    check_dense_input(a)?;
    let (eigenvalues, mut eigenvectors) = tridiag::symmetric_eigen(a)?;
    let mut residual_norms = Vec::with_capacity(eigenvalues.len());
    for (v, &l) in eigenvectors.iter_mut().zip(&eigenvalues) {
        fix_sign(v);
        let av = a.matvec(v)?;
        residual_norms.push(av.iter().zip(v.iter()).map(|(x, y)| (x - l * y).powi(2)).sum::<f64>().sqrt());
    }
    Ok(SpectralResult { eigenvalues, eigenvectors, solver: Solver::Dense, residual_norms, converged: true })
}

/// Eigenvalues only, descending.
pub fn eigvals_dense_symmetric(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_dense_input(a)?;
    tridiag::symmetric_eigenvalues(a)
}

/// Operator whose spectrum a sparse matrix stands for: `M` itself when
/// symmetric, otherwise `M M^T`.
pub fn spectral_operator(m: &SparseMatrix) -> Box<dyn SymmetricOperator + Sync + '_> {
    if m.is_symmetric() {
        Box::new(SymmetricSparse(m))
    } else {
        Box::new(GramOperator(m))
    }
}

/// Dense form of the same operator.
pub fn spectral_dense(m: &SparseMatrix) -> DenseMatrix {
    if m.is_symmetric() {
        m.to_dense_matrix()
    } else {
        m.gram_dense()
    }
}

/// Top-`k` eigenpairs of `M M^T` (rectangular input) or `M` (symmetric input).
pub fn top_eigs(m: &SparseMatrix, k: usize, opts: &LanczosOptions) -> Result<SpectralResult> {
    lanczos_top(spectral_operator(m).as_ref(), k, opts)
}
