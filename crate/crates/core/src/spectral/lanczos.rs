//! Lanczos iteration with full reorthogonalization for the top of the
//! spectrum of a symmetric operator.

use rand::Rng;

use super::tridiag::{descending_order, implicit_ql};
use super::{fix_sign, SpectralResult, Solver};
use crate::dense::{axpy, dot, norm2, DenseMatrix};
use crate::error::{domain, Result};
use crate::matrix::SparseMatrix;
use crate::seed::{stream, Purpose};

/// A symmetric linear map `y = A x`.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// `Sigma = M M^T` applied through two sparse products.
pub struct GramOperator<'a>(pub &'a SparseMatrix);

impl SymmetricOperator for GramOperator<'_> {
    fn dim(&self) -> usize {
        self.0.rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = vec![0.0; self.0.cols()];
        self.0.gram_matvec_into(x, &mut tmp, y);
    }
}

/// A symmetric sparse matrix used directly.
pub struct SymmetricSparse<'a>(pub &'a SparseMatrix);

impl SymmetricOperator for SymmetricSparse<'_> {
    fn dim(&self) -> usize {
        self.0.rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.matvec_into(x, y);
    }
}

impl SymmetricOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Relative residual target: `||A v - theta v|| <= tol * max(1, |theta|)`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 k + 400`.
    pub max_iter: Option<usize>,
    /// Seed of the random start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-10, max_iter: None, seed: 0x5eed }
    }
}

impl LanczosOptions {
    pub fn with_tol(tol: f64) -> Self {
        LanczosOptions { tol, ..Self::default() }
    }
}

fn random_unit(dim: usize, seed: u64, draw: u64, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut rng = stream(seed, Purpose::Lanczos, draw);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            axpy(-c, q, &mut v);
        }
    }
    let nv = norm2(&v);
    if nv <= 1e-10 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    Some(v)
}

/// Ritz values (descending) and the matching last components of the
/// tridiagonal eigenvectors.
fn ritz_estimates(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut e: Vec<f64> = beta[..m - 1].to_vec();
    e.push(0.0);
    let mut last = vec![0.0; m];
    last[m - 1] = 1.0;
    implicit_ql(&mut d, &mut e, Some((&mut last, 1)))?;
    let order = descending_order(&d);
    Ok((order.iter().map(|&i| d[i]).collect(), order.iter().map(|&i| last[i]).collect()))
}

/// Top-`k` eigenpairs (largest algebraic eigenvalues) of `op`.
pub fn lanczos_top<O: SymmetricOperator + ?Sized>(op: &O, k: usize, opts: &LanczosOptions) -> Result<SpectralResult> {
    let dim = op.dim();
    if k == 0 || k > dim.min(50) {
        return Err(domain(format!("requested k = {k} eigenpairs, allowed 1..={}", dim.min(50))));
    }
    if !(opts.tol >= 1e-12) {
        return Err(domain(format!("tolerance {} below 1e-12", opts.tol)));
    }
    let cap = opts.max_iter.unwrap_or(10 * k + 400).max(k).min(dim);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cap.min(dim));
    let mut alpha: Vec<f64> = Vec::new();
    // beta[j] couples basis vectors j and j + 1; zero after a restart.
    let mut beta: Vec<f64> = Vec::new();
    let mut restarts = 0usize;
    let mut draws = 0u64;
    let mut q = random_unit(dim, opts.seed, draws, &basis).ok_or_else(|| domain("operator has zero dimension"))?;
    draws += 1;
    let mut w = vec![0.0; dim];
    let mut converged = false;
    let mut scale = 0.0f64;

    while basis.len() < cap {
        op.apply(&q, &mut w);
        let a = dot(&q, &w);
        axpy(-a, &q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(std::mem::take(&mut q));
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        let b = norm2(&w);
        scale = scale.max(a.abs() + b);
        beta.push(b);
        let m = basis.len();

        let breakdown = b <= 1e-13 * scale.max(f64::MIN_POSITIVE);
        if m >= k && (breakdown || m == cap || m % 5 == 0) {
            let (theta, last) = ritz_estimates(&alpha, &beta)?;
            converged = (0..k).all(|i| (b * last[i]).abs() <= opts.tol * theta[i].abs().max(1.0));
            // A breakdown only certifies the current Krylov block; probe the
            // complement once before trusting it.
            if (converged && (!breakdown || restarts > 0)) || m == cap {
                break;
            }
        }
        if breakdown {
            // Invariant subspace found: continue from a fresh direction.
            *beta.last_mut().unwrap() = 0.0;
            restarts += 1;
            match random_unit(dim, opts.seed, draws, &basis) {
                Some(v) => q = v,
                None => break,
            }
            draws += 1;
        } else {
            q = w.iter().map(|x| x / b).collect();
        }
    }
    let m = basis.len();
    if m == dim {
        converged = true;
    }

    // Full eigenvectors of the final tridiagonal.
    let mut d = alpha.clone();
    let mut e: Vec<f64> = beta[..m - 1].to_vec();
    e.push(0.0);
    let mut s = vec![0.0; m * m];
    for i in 0..m {
        s[i * m + i] = 1.0;
    }
    implicit_ql(&mut d, &mut e, Some((&mut s, m)))?;
    let order = descending_order(&d);

    let take = k.min(m);
    let mut eigenvalues = Vec::with_capacity(take);
    let mut eigenvectors = Vec::with_capacity(take);
    let mut residual_norms = Vec::with_capacity(take);
    let mut av = vec![0.0; dim];
    for &idx in order.iter().take(take) {
        let theta = d[idx];
        let coeffs = &s[idx * m..(idx + 1) * m];
        let mut y = vec![0.0; dim];
        for (c, v) in coeffs.iter().zip(&basis) {
            axpy(*c, v, &mut y);
        }
        let ny = norm2(&y);
        y.iter_mut().for_each(|x| *x /= ny);
        fix_sign(&mut y);
        op.apply(&y, &mut av);
        let r = av.iter().zip(&y).map(|(a, v)| (a - theta * v).powi(2)).sum::<f64>().sqrt();
        eigenvalues.push(theta);
        eigenvectors.push(y);
        residual_norms.push(r);
    }

    Ok(SpectralResult {
        eigenvalues,
        eigenvectors,
        solver: Solver::Lanczos { iterations: m, restarts },
        residual_norms,
        converged,
    })
}
