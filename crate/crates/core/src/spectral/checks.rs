//! Exact linear-algebra checks: interlacing, eigen-perturbation, the
//! residual of a planted basis vector, principal sub-radii and the
//! localization bound built on them.

use rand::seq::index::sample;

use super::lanczos::SymmetricOperator;
use super::tridiag::symmetric_eigenvalues;
use super::SpectralResult;
use crate::dense::{dot, DenseMatrix};
use crate::error::{domain, Error, Result};
use crate::localization::is_localized;
use crate::matrix::SparseMatrix;
use crate::seed::{stream, Purpose};

const INTERLACING_RTOL: f64 = 1e-9;
const COMBINATION_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterlacingMode {
    /// Symmetric matrix against one principal `(n-1)`-minor.
    HermitianMinor,
    /// Rectangular matrix against itself with one row removed.
    RowDeletion,
    /// Rectangular matrix against itself with one column removed.
    ColDeletion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterlacingReport {
    pub holds: bool,
    /// Largest amount by which an inequality fails (0 when none does).
    pub max_violation: f64,
    /// Number of inequalities tested.
    pub checked: usize,
}

/// Interlacing of two descending spectra. For the rectangular modes the
/// lists are eigenvalues of `M M^T`, i.e. squared singular values.
pub fn check_interlacing_values(parent: &[f64], minor: &[f64], mode: InterlacingMode) -> Result<InterlacingReport> {
    let expected = match mode {
        InterlacingMode::HermitianMinor | InterlacingMode::RowDeletion => parent.len().saturating_sub(1),
        InterlacingMode::ColDeletion => parent.len(),
    };
    if minor.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: minor.len() });
    }
    let scale = parent.iter().chain(minor).fold(0.0f64, |s, x| s.max(x.abs()));
    let tol = INTERLACING_RTOL * scale;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (k, &mk) in minor.iter().enumerate() {
        worst = worst.max(mk - parent[k]);
        checked += 1;
        if k + 1 < parent.len() {
            worst = worst.max(parent[k + 1] - mk);
            checked += 1;
        }
    }
    Ok(InterlacingReport { holds: worst <= tol, max_violation: worst.max(0.0), checked })
}

/// Deletes row/column `index` of `m` (per `mode`) and checks interlacing of
/// the two spectra computed densely.
pub fn check_interlacing(m: &SparseMatrix, mode: InterlacingMode, index: usize) -> Result<InterlacingReport> {
    let (bound, what) = match mode {
        InterlacingMode::HermitianMinor => {
            if !m.is_symmetric() {
                return Err(domain("principal-minor interlacing needs a symmetric matrix"));
            }
            (m.rows(), "row")
        }
        InterlacingMode::RowDeletion => (m.rows(), "row"),
        InterlacingMode::ColDeletion => (m.cols(), "column"),
    };
    if index >= bound {
        return Err(domain(format!("{what} {index} out of range ({bound})")));
    }
    let (parent, minor) = match mode {
        InterlacingMode::HermitianMinor => (m.to_dense_matrix(), m.principal_minor(index).to_dense_matrix()),
        InterlacingMode::RowDeletion => (m.gram_dense(), m.delete_row(index).gram_dense()),
        InterlacingMode::ColDeletion => (m.gram_dense(), m.delete_col(index).gram_dense()),
    };
    check_interlacing_values(&symmetric_eigenvalues(&parent)?, &symmetric_eigenvalues(&minor)?, mode)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartB {
    /// The ball around `zeta` isolates one eigenvalue with gap `gap > epsilon`.
    Evaluated { gap: f64, bound: f64, deviation: f64, holds: bool },
    /// Zero or several eigenvalues in the ball, or the gap does not exceed epsilon.
    NotIsolated,
    /// The spectrum is partial, so isolation cannot be decided.
    IncompleteSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationCheck {
    /// Rayleigh value `<v, A v>`.
    pub zeta: f64,
    /// `||(A - zeta) v||`.
    pub epsilon: f64,
    pub nearest_eig_distance: f64,
    pub part_a_holds: bool,
    pub part_b: PartB,
}

/// Eigenvalue and eigenvector perturbation bounds for a trial unit vector `v`.
pub fn perturbation_check<O: SymmetricOperator + ?Sized>(a: &O, v: &[f64], spectrum: &SpectralResult) -> Result<PerturbationCheck> {
    let n = a.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    if (dot(v, v).sqrt() - 1.0).abs() > 1e-10 {
        return Err(domain("trial vector is not a unit vector"));
    }
    if spectrum.eigenvalues.is_empty() {
        return Err(domain("empty spectrum"));
    }
    let mut av = vec![0.0; n];
    a.apply(v, &mut av);
    let zeta = dot(v, &av);
    let epsilon = av.iter().zip(v).map(|(x, y)| (x - zeta * y).powi(2)).sum::<f64>().sqrt();
    let (nearest_idx, nearest_eig_distance) = spectrum
        .eigenvalues
        .iter()
        .map(|l| (l - zeta).abs())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty spectrum");
    let scale = spectrum.eigenvalues.iter().fold(1.0f64, |s, l| s.max(l.abs()));
    let part_a_holds = nearest_eig_distance <= epsilon + 1e-9 * scale;

    let complete = spectrum.is_complete() && spectrum.eigenvalues.len() == n && spectrum.eigenvectors.len() == n;
    let part_b = if !complete {
        PartB::IncompleteSpectrum
    } else {
        // Rounding in zeta and epsilon should not decide isolation.
        let slack = 1e-12 * scale;
        let inside = spectrum.eigenvalues.iter().filter(|l| (*l - zeta).abs() <= epsilon + slack).count();
        let gap = spectrum
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != nearest_idx)
            .map(|(_, l)| (l - zeta).abs())
            .fold(f64::INFINITY, f64::min);
        if inside == 1 && gap > epsilon + slack {
            let u = &spectrum.eigenvectors[nearest_idx];
            let overlap = dot(v, u);
            // Direct norm of the rejection; sqrt(1 - overlap^2) loses half the digits.
            let deviation = u.iter().zip(v).map(|(x, y)| (x - overlap * y).powi(2)).sum::<f64>().sqrt();
            let bound = 2.0 * epsilon / (gap - epsilon);
            PartB::Evaluated { gap, bound, deviation, holds: deviation <= bound + 1e-9 }
        } else {
            PartB::NotIsolated
        }
    };
    Ok(PerturbationCheck { zeta, epsilon, nearest_eig_distance, part_a_holds, part_b })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub i: usize,
    pub j: usize,
    /// `Sigma e_i - m_ij^2 e_i`.
    pub r: Vec<f64>,
    pub norm: f64,
}

/// Residual of the basis vector of the `l`-th largest entry (1-based) as an
/// approximate eigenvector of `M M^T`.
pub fn residual_vector(m: &SparseMatrix, l: usize) -> Result<ResidualVector> {
    if m.is_symmetric() {
        return Err(domain("residual vector is defined for the rectangular ensemble"));
    }
    if l == 0 {
        return Err(domain("entry rank is 1-based"));
    }
    let top = m.top_entries(l);
    let e = top
        .entries
        .get(l - 1)
        .ok_or_else(|| domain(format!("matrix has fewer than {l} nonzero entries")))?;
    let mut basis = vec![0.0; m.rows()];
    basis[e.i] = 1.0;
    let mut r = m.gram_matvec(&basis)?;
    r[e.i] -= e.magnitude * e.magnitude;
    let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(ResidualVector { i: e.i, j: e.j, r, norm })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubradiusMode {
    Exact,
    RandomSample { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subradius {
    pub value: f64,
    /// False for sampled subsets, where `value` is only a lower bound.
    pub exact: bool,
    pub support: Vec<usize>,
}

fn binomial_capped(n: usize, k: usize, cap: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > cap as u128 {
            return None;
        }
    }
    Some(c as u64)
}

fn spectral_radius_of(a: &DenseMatrix, idx: &[usize]) -> Result<f64> {
    if idx.len() == 1 {
        return Ok(a[(idx[0], idx[0])].abs());
    }
    let ev = symmetric_eigenvalues(&a.principal_submatrix(idx))?;
    Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
}

/// Largest spectral radius over `l x l` principal submatrices of `a`.
pub fn principal_subradius(a: &DenseMatrix, l: usize, mode: SubradiusMode) -> Result<Subradius> {
    a.check_symmetric(1e-12)?;
    let dim = a.rows();
    if l == 0 || l > dim {
        return Err(domain(format!("submatrix size {l} outside 1..={dim}")));
    }
    let mut best = Subradius { value: -1.0, exact: true, support: Vec::new() };
    let mut consider = |idx: &[usize]| -> Result<()> {
        let r = spectral_radius_of(a, idx)?;
        if r > best.value {
            best.value = r;
            best.support = idx.to_vec();
        }
        Ok(())
    };
    match mode {
        SubradiusMode::Exact => {
            if binomial_capped(dim, l, COMBINATION_LIMIT).is_none() {
                return Err(Error::Combinatorial { dim, size: l, limit: COMBINATION_LIMIT });
            }
            let mut idx: Vec<usize> = (0..l).collect();
            loop {
                consider(&idx)?;
                // Next combination in lexicographic order.
                let Some(pos) = (0..l).rev().find(|&p| idx[p] < dim - l + p) else { break };
                idx[pos] += 1;
                for q in pos + 1..l {
                    idx[q] = idx[q - 1] + 1;
                }
            }
        }
        SubradiusMode::RandomSample { trials, seed } => {
            if trials == 0 {
                return Err(domain("need at least one sampled subset"));
            }
            for t in 0..trials {
                let mut rng = stream(seed, Purpose::Spot, t as u64);
                let mut idx = sample(&mut rng, dim, l).into_vec();
                idx.sort_unstable();
                consider(&idx)?;
            }
            best.exact = false;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationBound {
    /// `|lambda|`.
    pub lhs: f64,
    /// `(rho_L + sqrt(eta) ||A||) / sqrt(1 - eta)`.
    pub rhs: f64,
    pub holds: bool,
    /// Whether `v` is `(L, eta)`-localized and `(lambda, v)` is an eigenpair to 1e-8.
    pub preconditions: bool,
}

/// Bound on an eigenvalue whose eigenvector is `(L, eta)`-localized, in terms
/// of the largest `L x L` principal sub-radius of `a`.
pub fn localization_bound_check(a: &DenseMatrix, lambda: f64, v: &[f64], l: usize, eta: f64) -> Result<LocalizationBound> {
    let n = a.rows();
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    let spectrum = symmetric_eigenvalues(a)?;
    let norm = spectrum.first().map_or(0.0, |&t| t.abs()).max(spectrum.last().map_or(0.0, |&b| b.abs()));
    let av = a.matvec(v)?;
    let res = av.iter().zip(v).map(|(x, y)| (x - lambda * y).powi(2)).sum::<f64>().sqrt();
    let preconditions = is_localized(v, l, eta)? && res <= 1e-8 * norm.max(1.0);
    let rho = principal_subradius(a, l, SubradiusMode::Exact)?.value;
    let lhs = lambda.abs();
    let rhs = (rho + eta.sqrt() * norm) / (1.0 - eta).sqrt();
    Ok(LocalizationBound { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) + 1e-12, preconditions })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBounds {
    pub lambda1: f64,
    /// `max_i sum_j m_ij^2`.
    pub max_row_mass: f64,
    /// `max |m_ij|^2`.
    pub max_entry_sq: f64,
    /// `||M||_inf ||M||_1`.
    pub norm_product: f64,
    pub rayleigh_holds: bool,
    pub norm_holds: bool,
}

/// Rayleigh lower bound and norm upper bound on `lambda1(M M^T)`, with 1e-9
/// relative slack.
pub fn norm_bounds(m: &SparseMatrix, lambda1: f64) -> Result<NormBounds> {
    if m.is_symmetric() {
        return Err(domain("covariance bounds need a rectangular matrix"));
    }
    let max_row_mass = m.row_square_sums().into_iter().fold(0.0, f64::max);
    let max_entry_sq = m.max_abs().powi(2);
    let (inf, one) = m.norms();
    let norm_product = inf * one;
    Ok(NormBounds {
        lambda1,
        max_row_mass,
        max_entry_sq,
        norm_product,
        rayleigh_holds: lambda1 >= max_row_mass * (1.0 - 1e-9) && max_row_mass >= max_entry_sq * (1.0 - 1e-12),
        norm_holds: lambda1 <= norm_product * (1.0 + 1e-9),
    })
}
