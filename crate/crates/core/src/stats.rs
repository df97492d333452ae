//! Empirical distributions, goodness of fit and count statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::limits::{mp_cdf, mp_edges, pp_mean_count, IntensityKind};
use crate::matrix::SparseMatrix;

/// Empirical CDF `F(x) = #{samples <= x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(domain("need at least one sample"));
    }
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(domain(format!("non-finite sample {x}")));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        Ok(Ecdf { sorted: sorted_finite(samples)? })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Exact sup distance between two step functions.
    pub fn distance(&self, other: &Ecdf) -> f64 {
        self.sorted
            .iter()
            .chain(&other.sorted)
            .map(|&x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Kolmogorov–Smirnov distance to a continuous CDF, evaluated on both sides
/// of each jump.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let s = sorted_finite(samples)?;
    let n = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((((i + 1) as f64) / n - f).abs()).max((i as f64 / n - f).abs())
    }))
}

/// Asymptotic 95% critical value of the one-sample KS distance.
pub fn ks_critical_95(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonCount {
    pub threshold: f64,
    /// Mean count above the threshold across replicates.
    pub mean: f64,
    pub variance: f64,
    pub expected: f64,
    /// `(mean - expected) / sqrt(expected / replicates)`.
    pub z_score: f64,
}

/// Number of points strictly above each threshold.
pub fn counts_above(points: &[f64], thresholds: &[f64]) -> Vec<usize> {
    thresholds.iter().map(|&x| points.iter().filter(|&&p| p > x).count()).collect()
}

/// Compares per-replicate counts above each threshold with the limiting
/// Poisson mean.
pub fn poisson_count_test(replicates: &[Vec<f64>], thresholds: &[f64], alpha: f64, kind: IntensityKind) -> Result<Vec<PoissonCount>> {
    if thresholds.is_empty() {
        return Err(domain("no thresholds given"));
    }
    if replicates.is_empty() {
        return Err(domain("no replicates given"));
    }
    let per: Vec<Vec<usize>> = replicates.iter().map(|pts| counts_above(pts, thresholds)).collect();
    let r = replicates.len() as f64;
    thresholds
        .iter()
        .enumerate()
        .map(|(t, &x)| {
            let expected = pp_mean_count(x, alpha, kind)?;
            let mean = per.iter().map(|c| c[t] as f64).sum::<f64>() / r;
            let variance = if per.len() > 1 {
                per.iter().map(|c| (c[t] as f64 - mean).powi(2)).sum::<f64>() / (r - 1.0)
            } else {
                0.0
            };
            let z_score = (mean - expected) / (expected / r).sqrt();
            Ok(PoissonCount { threshold: x, mean, variance, expected, z_score })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsdHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// KS distance between the normalized spectrum and the Marchenko–Pastur law.
    pub ks_mp: f64,
}

impl EsdHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_lo,bin_hi,count")?;
        for (b, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", self.edges[b], self.edges[b + 1], c)?;
        }
        Ok(())
    }
}

/// Histogram of `spectrum / scale` on `[0, 1.5 lambda_+]`. Values outside the
/// window land in the nearest end bin so the counts add up to the spectrum size.
pub fn esd(spectrum: &[f64], scale: f64, rho: f64, bins: usize) -> Result<EsdHistogram> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(domain(format!("ESD scale must be positive, got {scale}")));
    }
    if bins == 0 {
        return Err(domain("need at least one bin"));
    }
    let (_, hi) = mp_edges(rho)?;
    let top = 1.5 * hi;
    let normalized: Vec<f64> = spectrum.iter().map(|l| l / scale).collect();
    let mut counts = vec![0usize; bins];
    for &x in &normalized {
        let b = ((x / top) * bins as f64).floor();
        let b = if b.is_nan() || b < 0.0 { 0 } else { (b as usize).min(bins - 1) };
        counts[b] += 1;
    }
    let edges = (0..=bins).map(|b| top * b as f64 / bins as f64).collect();
    let ks_mp = ks_statistic(&normalized, |x| mp_cdf(x, rho).unwrap_or(f64::NAN))?;
    Ok(EsdHistogram { edges, counts, ks_mp })
}

/// Average count per slot within relative error `eta` of `prob`.
pub fn concentration_check(counts: &[usize], m: usize, prob: f64, eta: f64) -> Result<bool> {
    if counts.is_empty() || !(m as f64 * prob > 0.0) {
        return Err(domain("concentration check needs counts and m * prob > 0"));
    }
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    Ok((mean / m as f64 - prob).abs() <= eta * prob)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collisions {
    pub row_collisions: usize,
    pub col_collisions: usize,
}

/// Rows and columns holding two or more entries with `|m| > threshold`.
pub fn large_entry_collision_scan(m: &SparseMatrix, threshold: f64) -> Result<Collisions> {
    if !(threshold > 0.0) {
        return Err(domain(format!("threshold must be positive, got {threshold}")));
    }
    let mut rows = vec![0u32; m.rows()];
    let mut cols = vec![0u32; m.cols()];
    for i in 0..m.rows() {
        for (j, v) in m.row(i) {
            if v.abs() > threshold && (!m.is_symmetric() || j >= i) {
                rows[i] += 1;
                cols[j] += 1;
            }
        }
    }
    let two = |c: &Vec<u32>| c.iter().filter(|&&k| k >= 2).count();
    Ok(Collisions { row_collisions: two(&rows), col_collisions: two(&cols) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl TestRecord {
    /// `|observed - expected| <= tolerance`.
    pub fn within(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        TestRecord { name: name.into(), observed, expected, tolerance, pass: (observed - expected).abs() <= tolerance }
    }

    /// `observed <= expected + tolerance`.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        TestRecord { name: name.into(), observed, expected: bound, tolerance: 0.0, pass: observed <= bound }
    }

    /// `observed >= bound`.
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        TestRecord { name: name.into(), observed, expected: bound, tolerance: 0.0, pass: observed >= bound }
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (zero for a single value).
pub fn std_dev(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Some(0.0);
    }
    Some((values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt())
}

/// Linear-interpolation quantile (type 7) of the finite values.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    let mut s: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if s.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    s.sort_by(f64::total_cmp);
    let h = q * (s.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(s[lo] + (h - lo as f64) * (s[hi] - s[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Fraction of `flags` that are true.
pub fn frequency(flags: impl IntoIterator<Item = bool>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for f in flags {
        hit += f as usize;
        total += 1;
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}
