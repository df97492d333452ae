//! Compressed sparse-row storage and the entrywise operations built on it:
//! products with `M` and `M M^T`, the `inf`/`1` norms, entry ranking,
//! truncation and filtered row/column sums.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{dot, DenseMatrix};
use crate::error::{domain, Error, Result};

/// CSR matrix. Symmetric matrices store both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

/// One entry of the magnitude ranking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    /// 1-based rank.
    pub l: usize,
    pub i: usize,
    pub j: usize,
    pub magnitude: f64,
    /// Argument of the entry: 0 for positive, pi for negative.
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopEntries {
    pub entries: Vec<RankedEntry>,
    /// Set when fewer than the requested number of entries exist.
    pub truncated: bool,
}

/// `M = M_hat + M_prime` with `M_hat` holding entries `|m| <= level`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSplit {
    pub level: f64,
    pub hat: SparseMatrix,
    pub prime: SparseMatrix,
}

impl TruncationSplit {
    /// Subtracts `mean` from `M_hat` on the whole support of `M`.
    /// A zero mean (every symmetric law) leaves the split untouched.
    pub fn recenter(mut self, mean: f64) -> Self {
        if mean == 0.0 {
            return self;
        }
        let hat = &self.hat;
        let prime = &self.prime;
        let rows: Vec<Vec<(usize, f64)>> = (0..hat.rows)
            .map(|i| {
                let mut row: Vec<(usize, f64)> = hat.row(i).map(|(j, v)| (j, v - mean)).collect();
                row.extend(prime.row(i).map(|(j, _)| (j, -mean)));
                row.sort_by_key(|e| e.0);
                row.retain(|e| e.1 != 0.0);
                row
            })
            .collect();
        self.hat = SparseMatrix::from_sorted_rows(hat.rows, hat.cols, rows, hat.symmetric);
        self
    }
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, row_ptr: vec![0; rows + 1], col_idx: Vec::new(), values: Vec::new(), symmetric: false }
    }

    /// Builds from per-row `(column, value)` lists already sorted by column.
    pub(crate) fn from_sorted_rows(rows: usize, cols: usize, data: Vec<Vec<(usize, f64)>>, symmetric: bool) -> Self {
        debug_assert_eq!(data.len(), rows);
        let nnz = data.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in data {
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix { rows, cols, row_ptr, col_idx, values, symmetric }
    }

    /// Mirrors upper-triangular rows (`j >= i`) into a full symmetric matrix.
    pub(crate) fn from_upper_rows(n: usize, upper: Vec<Vec<(usize, f64)>>) -> Self {
        let mut full: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in upper.iter().enumerate() {
            for &(j, v) in row {
                if j != i {
                    full[j].push((i, v));
                }
            }
        }
        // Lower parts arrive in increasing i, so each row stays sorted.
        for (i, row) in upper.into_iter().enumerate() {
            full[i].extend(row);
        }
        Self::from_sorted_rows(n, n, full, true)
    }

    /// Builds from unordered triplets. Duplicates are an error and explicit
    /// zeros are dropped. With `symmetric`, triplets must satisfy `i <= j`
    /// and are mirrored.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>, symmetric: bool) -> Result<Self> {
        if symmetric && rows != cols {
            return Err(Error::DimensionMismatch { expected: rows, got: cols });
        }
        for &(i, j, v) in &triplets {
            if i >= rows || j >= cols {
                return Err(domain(format!("entry ({i}, {j}) outside {rows} x {cols}")));
            }
            if !v.is_finite() {
                return Err(domain(format!("entry ({i}, {j}) is not finite")));
            }
            if symmetric && i > j {
                return Err(domain(format!("symmetric input must list i <= j, got ({i}, {j})")));
            }
        }
        triplets.retain(|t| t.2 != 0.0);
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(domain(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
        }
        let mut data = vec![Vec::new(); rows];
        for (i, j, v) in triplets {
            data[i].push((j, v));
        }
        Ok(if symmetric { Self::from_upper_rows(rows, data) } else { Self::from_sorted_rows(rows, cols, data, false) })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let data = (0..m.rows())
            .map(|i| m.row(i).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, &v)| (j, v)).collect())
            .collect();
        Self::from_sorted_rows(m.rows(), m.cols(), data, false)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Nonzero positions in row-major order.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        (0..self.rows).flat_map(|i| self.row(i).map(move |(j, _)| (i, j))).collect()
    }

    /// All stored entries as `(i, j, value)`; upper triangle only if symmetric.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| !self.symmetric || j >= i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows * self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                d[i * self.cols + j] = v;
            }
        }
        d
    }

    pub fn to_dense_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_row_major(self.rows, self.cols, self.to_dense()).expect("shape is consistent")
    }

    pub fn transpose(&self) -> Self {
        if self.symmetric {
            return self.clone();
        }
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let k = next[j];
                col_idx[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        SparseMatrix { rows: self.cols, cols: self.rows, row_ptr, col_idx, values, symmetric: false }
    }

    /// Keeps rows for which `keep(i)` is true (rectangular result).
    fn select_rows(&self, keep: impl Fn(usize) -> bool) -> Self {
        let data: Vec<Vec<(usize, f64)>> = (0..self.rows).filter(|&i| keep(i)).map(|i| self.row(i).collect()).collect();
        Self::from_sorted_rows(data.len(), self.cols, data, false)
    }

    /// `M` with row `r` removed.
    pub fn delete_row(&self, r: usize) -> Self {
        self.select_rows(|i| i != r)
    }

    /// `M` with column `c` removed; later columns shift left.
    pub fn delete_col(&self, c: usize) -> Self {
        let data = (0..self.rows)
            .map(|i| self.row(i).filter(|&(j, _)| j != c).map(|(j, v)| (if j > c { j - 1 } else { j }, v)).collect())
            .collect();
        Self::from_sorted_rows(self.rows, self.cols - 1, data, false)
    }

    /// Row/column `r` removed from a symmetric matrix.
    pub fn principal_minor(&self, r: usize) -> Self {
        let mut m = self.select_rows(|i| i != r).delete_col(r);
        m.symmetric = self.symmetric;
        m
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        let mut out = vec![0.0; self.rows];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.col_idx[r.clone()].iter().zip(&self.values[r]).map(|(&j, &a)| a * v[j]).sum();
        }
    }

    /// `M^T v` by scattering over rows.
    pub(crate) fn rmatvec_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            for (&j, &a) in self.col_idx[r.clone()].iter().zip(&self.values[r]) {
                out[j] += a * vi;
            }
        }
    }

    /// `M (M^T v)` without forming `M M^T`.
    pub fn gram_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: v.len() });
        }
        let mut tmp = vec![0.0; self.cols];
        let mut out = vec![0.0; self.rows];
        self.gram_matvec_into(v, &mut tmp, &mut out);
        Ok(out)
    }

    pub(crate) fn gram_matvec_into(&self, v: &[f64], tmp: &mut [f64], out: &mut [f64]) {
        self.rmatvec_into(v, tmp);
        self.matvec_into(tmp, out);
    }

    /// Forms `M M^T` densely (oracle and ESD paths only).
    pub fn gram_dense(&self) -> DenseMatrix {
        let p = self.rows;
        let density = self.nnz() as f64 / (p as f64 * self.cols as f64).max(1.0);
        let mut g = vec![0.0; p * p];
        if density > 0.05 {
            let d = self.to_dense();
            let n = self.cols;
            g.par_chunks_mut(p).enumerate().for_each(|(a, out)| {
                let ra = &d[a * n..(a + 1) * n];
                for b in a..p {
                    out[b] = dot(ra, &d[b * n..(b + 1) * n]);
                }
            });
        } else {
            let t = self.transpose();
            for k in 0..t.rows {
                let entries: Vec<(usize, f64)> = t.row(k).collect();
                for (x, &(a, va)) in entries.iter().enumerate() {
                    for &(b, vb) in &entries[x..] {
                        g[a * p + b] += va * vb;
                    }
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[a * p + b] = g[b * p + a];
            }
        }
        DenseMatrix::from_row_major(p, p, g).expect("square")
    }

    /// `(||M||_inf, ||M||_1)`: maximum absolute row sum and column sum.
    pub fn norms(&self) -> (f64, f64) {
        let inf = (0..self.rows).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let mut col = vec![0.0; self.cols];
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            col[j] += v.abs();
        }
        (inf, col.into_iter().fold(0.0, f64::max))
    }

    /// `sum_j m_ij^2` per row, the diagonal of `M M^T`.
    pub fn row_square_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).map(|(_, v)| v * v).sum()).collect()
    }

    /// The `k` largest entries in absolute value, ties broken by `(i, j)`.
    pub fn top_entries(&self, k: usize) -> TopEntries {
        let mut all = self.triplets();
        let truncated = k > all.len();
        let k = k.min(all.len());
        let order = |a: &(usize, usize, f64), b: &(usize, usize, f64)| -> Ordering {
            b.2.abs().total_cmp(&a.2.abs()).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1))
        };
        if k > 0 && k < all.len() {
            all.select_nth_unstable_by(k - 1, order);
            all.truncate(k);
        }
        all.sort_by(order);
        all.truncate(k);
        let entries = all
            .into_iter()
            .enumerate()
            .map(|(x, (i, j, v))| RankedEntry {
                l: x + 1,
                i,
                j,
                magnitude: v.abs(),
                theta: if v < 0.0 { std::f64::consts::PI } else { 0.0 },
            })
            .collect();
        TopEntries { entries, truncated }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Splits at `level`: entries with `|m| <= level` go to `hat`, the rest to `prime`.
    pub fn truncate_split(&self, level: f64) -> Result<TruncationSplit> {
        if !(level > 0.0) {
            return Err(domain(format!("truncation level must be positive, got {level}")));
        }
        let mut hat = Vec::with_capacity(self.rows);
        let mut prime = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let (h, p): (Vec<_>, Vec<_>) = self.row(i).partition(|&(_, v)| v.abs() <= level);
            hat.push(h);
            prime.push(p);
        }
        Ok(TruncationSplit {
            level,
            hat: Self::from_sorted_rows(self.rows, self.cols, hat, self.symmetric),
            prime: Self::from_sorted_rows(self.rows, self.cols, prime, self.symmetric),
        })
    }

    /// `S_i = sum_j |m_ij| 1{lo < |m_ij| <= hi}`.
    pub fn filtered_row_sums(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        if !(lo < hi) {
            return Err(domain(format!("filter window needs lo < hi, got ({lo}, {hi}]")));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).filter(|&a| lo < a && a <= hi).sum())
            .collect())
    }

    /// Column variant of [`filtered_row_sums`](Self::filtered_row_sums).
    pub fn filtered_col_sums(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        if !(lo < hi) {
            return Err(domain(format!("filter window needs lo < hi, got ({lo}, {hi}]")));
        }
        let mut out = vec![0.0; self.cols];
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            let a = v.abs();
            if lo < a && a <= hi {
                out[j] += a;
            }
        }
        Ok(out)
    }

    pub fn row_counts(&self) -> Vec<usize> {
        (0..self.rows).map(|i| self.row_nnz(i)).collect()
    }

    pub fn col_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.cols];
        for &j in &self.col_idx {
            c[j] += 1;
        }
        c
    }

    /// `(L, L~)`: maximum nonzero count over rows and over columns.
    pub fn row_nonzero_counts(&self) -> (usize, usize) {
        (
            self.row_counts().into_iter().max().unwrap_or(0),
            self.col_counts().into_iter().max().unwrap_or(0),
        )
    }

    /// Writes `i,j,value` lines in row-major order (upper triangle if symmetric).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,value")?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{i},{j},{}", format_value(v))?;
        }
        Ok(())
    }

    /// Reads the `i,j,value` format. Dimensions default to the largest
    /// indices seen plus one.
    pub fn read_csv<R: BufRead>(r: R, dims: Option<(usize, usize)>, symmetric: bool) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == "i,j,value" => {}
            Some((_, Ok(h))) => return Err(Error::Parse { line: 1, msg: format!("expected header `i,j,value`, got `{h}`") }),
            Some((_, Err(e))) => return Err(e.into()),
            None => return Err(Error::Parse { line: 1, msg: "empty file".into() }),
        }
        let mut triplets = Vec::new();
        let (mut max_i, mut max_j) = (0usize, 0usize);
        for (idx, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse { line: idx + 1, msg: format!("{msg}: `{line}`") };
            let mut parts = line.split(',');
            let (Some(a), Some(b), Some(c), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected three fields"));
            };
            let i: usize = a.trim().parse().map_err(|_| bad("bad row index"))?;
            let j: usize = b.trim().parse().map_err(|_| bad("bad column index"))?;
            let v: f64 = c.trim().parse().map_err(|_| bad("bad value"))?;
            max_i = max_i.max(i + 1);
            max_j = max_j.max(j + 1);
            triplets.push((i, j, v));
        }
        let (rows, cols) = match dims {
            Some(d) => d,
            None if symmetric => {
                let n = max_i.max(max_j);
                (n, n)
            }
            None => (max_i, max_j),
        };
        Self::from_triplets(rows, cols, triplets, symmetric)
    }
}

fn format_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(rows: usize, cols: usize, density: f64, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if rng.random::<f64>() < density {
                    t.push((i, j, rng.random::<f64>() * 2.0 - 1.0));
                }
            }
        }
        SparseMatrix::from_triplets(rows, cols, t, false).unwrap()
    }

    fn dense_mv(d: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
        (0..rows).map(|i| (0..cols).map(|j| d[i * cols + j] * v[j]).sum()).collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    #[test]
    fn matvec_small_cases() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 3.0), (1, 1, 5.0)], false).unwrap();
        assert_eq!(m.matvec(&[1.0, 1.0]).unwrap(), vec![3.0, 5.0]);
        let z = SparseMatrix::zeros(3, 4);
        assert_eq!(z.matvec(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.0; 3]);
        assert!(z.matvec(&[1.0]).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let m = random_sparse(20, 30, 0.3, 1);
        let v: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let expect = dense_mv(&m.to_dense(), 20, 30, &v);
        assert!(rel_err(&m.matvec(&v).unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn gram_matvec_cases() {
        let m = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 2.0)], false).unwrap();
        assert_eq!(m.gram_matvec(&[1.0]).unwrap(), vec![4.0]);
        let m = SparseMatrix::from_triplets(2, 4, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 2, 3.0), (1, 3, 4.0)], false).unwrap();
        assert_eq!(m.gram_matvec(&[1.0, 0.0]).unwrap(), vec![5.0, 0.0]);
        assert!(m.gram_matvec(&[1.0; 4]).is_err());
    }

    #[test]
    fn gram_matvec_matches_explicit_product() {
        let m = random_sparse(15, 25, 0.4, 2);
        let d = m.to_dense();
        let mut g = vec![0.0; 15 * 15];
        for a in 0..15 {
            for b in 0..15 {
                g[a * 15 + b] = (0..25).map(|k| d[a * 25 + k] * d[b * 25 + k]).sum();
            }
        }
        let v: Vec<f64> = (0..15).map(|i| 1.0 + i as f64).collect();
        assert!(rel_err(&m.gram_matvec(&v).unwrap(), &dense_mv(&g, 15, 15, &v)) < 1e-12);
        let gd = m.gram_dense();
        for (x, y) in gd.as_slice().iter().zip(&g) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn gram_dense_sparse_route_agrees() {
        let m = random_sparse(30, 40, 0.03, 3);
        let gd = m.gram_dense();
        let d = m.to_dense();
        for a in 0..30 {
            for b in 0..30 {
                let e: f64 = (0..40).map(|k| d[a * 40 + k] * d[b * 40 + k]).sum();
                assert!((gd[(a, b)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norms_hand_example() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, -2.0), (1, 1, 3.0)], false).unwrap();
        assert_eq!(m.norms(), (3.0, 5.0));
        assert_eq!(SparseMatrix::zeros(3, 3).norms(), (0.0, 0.0));
    }

    #[test]
    fn transpose_swaps_norms() {
        let m = random_sparse(12, 17, 0.4, 4);
        let (a, b) = m.norms();
        let (c, d) = m.transpose().norms();
        assert_eq!((a, b), (d, c));
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn top_entries_basic() {
        let m = SparseMatrix::from_triplets(3, 4, vec![(0, 1, -5.0), (2, 3, 4.0)], false).unwrap();
        let t = m.top_entries(1);
        assert_eq!(t.entries, vec![RankedEntry { l: 1, i: 0, j: 1, magnitude: 5.0, theta: std::f64::consts::PI }]);
        assert!(!t.truncated);
        let t = m.top_entries(5);
        assert!(t.truncated);
        assert_eq!(t.entries.len(), 2);
    }

    #[test]
    fn top_entries_tie_rule() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(1, 1, 1.0), (0, 1, -1.0), (1, 0, 1.0), (0, 0, 1.0)], false).unwrap();
        let pos: Vec<(usize, usize)> = m.top_entries(4).entries.iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pos, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn top_entries_match_full_sort() {
        let m = random_sparse(30, 30, 0.5, 5);
        let mut all: Vec<(usize, usize, f64)> = m.triplets();
        all.sort_by(|a, b| b.2.abs().partial_cmp(&a.2.abs()).unwrap().then((a.0, a.1).cmp(&(b.0, b.1))));
        let top = m.top_entries(10).entries;
        for (e, o) in top.iter().zip(&all) {
            assert_eq!((e.i, e.j, e.magnitude), (o.0, o.1, o.2.abs()));
        }
    }

    #[test]
    fn top_entries_symmetric_upper_only() {
        let m = SparseMatrix::from_triplets(3, 3, vec![(0, 2, -7.0), (1, 1, 2.0)], true).unwrap();
        let t = m.top_entries(3);
        assert_eq!(t.entries.len(), 2);
        assert_eq!((t.entries[0].i, t.entries[0].j), (0, 2));
    }

    #[test]
    fn truncation_cases() {
        let m = SparseMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, 10.0)], false).unwrap();
        let s = m.truncate_split(5.0).unwrap();
        assert_eq!(s.hat.triplets(), vec![(0, 0, 1.0)]);
        assert_eq!(s.prime.triplets(), vec![(0, 1, 10.0)]);
        let s = m.truncate_split(10.0).unwrap();
        assert_eq!(s.prime.nnz(), 0);
        assert!(m.truncate_split(0.0).is_err());
    }

    #[test]
    fn truncation_partition_is_exact() {
        let m = random_sparse(25, 25, 0.5, 6);
        let s = m.truncate_split(0.4).unwrap();
        let (h, p, d) = (s.hat.to_dense(), s.prime.to_dense(), m.to_dense());
        for k in 0..d.len() {
            assert!(h[k] == 0.0 || p[k] == 0.0);
            assert_eq!(h[k] + p[k], d[k]);
        }
        assert_eq!(s.hat.nnz() + s.prime.nnz(), m.nnz());
    }

    #[test]
    fn recenter_fills_support() {
        let m = SparseMatrix::from_triplets(1, 3, vec![(0, 0, 1.0), (0, 2, 10.0)], false).unwrap();
        let s = m.truncate_split(5.0).unwrap();
        assert_eq!(s.clone().recenter(0.0), s);
        let r = s.recenter(0.5);
        assert_eq!(r.hat.triplets(), vec![(0, 0, 0.5), (0, 2, -0.5)]);
    }

    #[test]
    fn filtered_sums() {
        let m = SparseMatrix::from_triplets(1, 3, vec![(0, 0, 1.0), (0, 1, -2.0), (0, 2, 3.0)], false).unwrap();
        assert_eq!(m.filtered_row_sums(1.5, 3.0).unwrap(), vec![5.0]);
        assert_eq!(m.filtered_row_sums(0.0, 4.0).unwrap(), vec![6.0]);
        assert_eq!(m.filtered_col_sums(1.5, 3.0).unwrap(), vec![0.0, 2.0, 3.0]);
        assert!(m.filtered_row_sums(2.0, 1.0).is_err());
    }

    #[test]
    fn filtered_sums_match_dense_filter() {
        let m = random_sparse(18, 22, 0.6, 7);
        let d = m.to_dense();
        let rows = m.filtered_row_sums(0.2, 0.7).unwrap();
        let cols = m.filtered_col_sums(0.2, 0.7).unwrap();
        let keep = |x: f64| if 0.2 < x.abs() && x.abs() <= 0.7 { x.abs() } else { 0.0 };
        for i in 0..18 {
            let e: f64 = (0..22).map(|j| keep(d[i * 22 + j])).sum();
            assert!((rows[i] - e).abs() < 1e-12);
        }
        for j in 0..22 {
            let e: f64 = (0..18).map(|i| keep(d[i * 22 + j])).sum();
            assert!((cols[j] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn nonzero_counts_dense() {
        let m = SparseMatrix::from_dense(&DenseMatrix::from_fn(4, 6, |_, _| 1.0));
        assert_eq!(m.row_nonzero_counts(), (6, 4));
    }

    #[test]
    fn deletion_and_minor() {
        let m = SparseMatrix::from_dense(&DenseMatrix::from_fn(3, 3, |i, j| (1 + 3 * i + j) as f64));
        assert_eq!(m.delete_row(1).to_dense(), vec![1.0, 2.0, 3.0, 7.0, 8.0, 9.0]);
        assert_eq!(m.delete_col(0).to_dense(), vec![2.0, 3.0, 5.0, 6.0, 8.0, 9.0]);
        assert_eq!(m.principal_minor(2).to_dense(), vec![1.0, 2.0, 4.0, 5.0]);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let m = SparseMatrix::from_triplets(3, 3, vec![(0, 0, 1.5), (0, 2, -1e-9), (1, 2, 2.5e20)], true).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i,j,value\n0,0,1.5\n"));
        let back = SparseMatrix::read_csv(&buf[..], Some((3, 3)), true).unwrap();
        assert_eq!(back, m);
        assert!(SparseMatrix::read_csv(&b"a,b,c\n"[..], None, false).is_err());
        assert!(SparseMatrix::read_csv(&b"i,j,value\n0,0,1\n0,0,2\n"[..], None, false).is_err());
        assert!(SparseMatrix::read_csv(&b"i,j,value\n1,0,1\n"[..], None, true).is_err());
    }
}
