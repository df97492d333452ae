//! Householder reduction to tridiagonal form and the implicit-shift QL
//! iteration, after the EISPACK `tred2`/`tql2` pair.
//!
//! Transformations are stored transposed (`w[j][k]` holds `V[k][j]`) so the
//! inner loops run over contiguous memory.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Sweeps allowed per eigenvalue before giving up.
const SWEEPS_PER_DIM: usize = 30;

/// Reduces the symmetric matrix in `w` (row-major, `n x n`) to tridiagonal
/// form. Returns `(diag, off)` with `off[i]` coupling `i` and `i + 1`
/// (`off[n - 1] = 0`). With `accumulate`, `w` ends up holding the transposed
/// orthogonal transform; otherwise its contents are unspecified.
pub(crate) fn householder_tridiagonalize(w: &mut [f64], n: usize, accumulate: bool) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return (d, e);
    }
    for j in 0..n {
        d[j] = w[j * n + n - 1];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[j * n + i - 1];
                w[j * n + i] = 0.0;
                w[i * n + j] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                w[i * n + j] = f;
                let row = &w[j * n..j * n + i];
                g = e[j] + row[j] * f;
                for k in (j + 1)..i {
                    g += row[k] * d[k];
                    e[k] += row[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let row = &mut w[j * n..j * n + i];
                for k in j..i {
                    row[k] -= f * e[k] + g * d[k];
                }
                d[j] = w[j * n + i - 1];
                w[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }

    if accumulate {
        for i in 0..n - 1 {
            w[i * n + n - 1] = w[i * n + i];
            w[i * n + i] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    d[k] = w[(i + 1) * n + k] / h;
                }
                for j in 0..=i {
                    let (head, tail) = w.split_at_mut((i + 1) * n);
                    let next = &tail[..=i];
                    let row = &mut head[j * n..j * n + i + 1];
                    let g: f64 = next.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
                    for k in 0..=i {
                        row[k] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                w[(i + 1) * n + k] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = w[j * n + n - 1];
            w[j * n + n - 1] = 0.0;
        }
        w[(n - 1) * n + n - 1] = 1.0;
    } else {
        for j in 0..n {
            d[j] = w[j * n + j];
        }
    }
    // Shift so off[i] couples i and i + 1.
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    (d, e)
}

/// Implicit-shift QL on the tridiagonal `(d, e)`. Eigenvalues overwrite `d`
/// (unsorted). When `vecs` is given as `(w, c)`, rows `i` and `i + 1` of the
/// `n x c` row-major block `w` receive every rotation, so `w` initialised to
/// the identity yields eigenvectors as rows.
pub(crate) fn implicit_ql(d: &mut [f64], e: &mut [f64], mut vecs: Option<(&mut [f64], usize)>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let mut sweeps = 0usize;
    let cap = SWEEPS_PER_DIM * n.max(1);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                sweeps += 1;
                if sweeps > cap {
                    return Err(Error::NoConvergence { iterations: sweeps });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some((w, cols)) = vecs.as_mut() {
                        let cols = *cols;
                        let (lo, hi) = w.split_at_mut((i + 1) * cols);
                        let wi = &mut lo[i * cols..];
                        let wi1 = &mut hi[..cols];
                        for k in 0..cols {
                            let hk = wi1[k];
                            wi1[k] = s * wi[k] + c * hk;
                            wi[k] = c * wi[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Indices that sort `values` in descending order (stable).
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Full symmetric eigen-decomposition: `(eigenvalues desc, eigenvectors as rows)`.
pub(crate) fn symmetric_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.rows();
    let mut w = a.as_slice().to_vec();
    let (mut d, mut e) = householder_tridiagonalize(&mut w, n, true);
    implicit_ql(&mut d, &mut e, Some((&mut w, n)))?;
    let order = descending_order(&d);
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = order.iter().map(|&i| w[i * n..(i + 1) * n].to_vec()).collect();
    Ok((values, vectors))
}

/// Eigenvalues only, descending.
pub(crate) fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.rows();
    let mut w = a.as_slice().to_vec();
    let (mut d, mut e) = householder_tridiagonalize(&mut w, n, false);
    implicit_ql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_input_is_preserved() {
        // Already tridiagonal: eigenvalues of the 1-D Laplacian are known.
        let n = 8;
        let a = DenseMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let vals = symmetric_eigenvalues(&a).unwrap();
        let mut expect: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        for (v, e) in vals.iter().zip(&expect) {
            assert!((v - e).abs() < 1e-13);
        }
    }

    #[test]
    fn values_only_matches_full() {
        let a = DenseMatrix::from_fn(9, 9, |i, j| ((i * 7 + j * 7) % 11) as f64 - 5.0 + if i == j { 1.0 } else { 0.0 });
        let (full, _) = symmetric_eigen(&a).unwrap();
        let only = symmetric_eigenvalues(&a).unwrap();
        for (x, y) in full.iter().zip(&only) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn one_by_one_and_empty() {
        let (v, w) = symmetric_eigen(&DenseMatrix::diag(&[4.0])).unwrap();
        assert_eq!(v, vec![4.0]);
        assert_eq!(w, vec![vec![1.0]]);
        assert!(symmetric_eigenvalues(&DenseMatrix::zeros(0, 0)).unwrap().is_empty());
    }
}
