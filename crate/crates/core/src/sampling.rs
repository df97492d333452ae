//! Heavy-tailed laws, sparsity masks and ensemble draws.
//!
//! A [`TailLaw`] is a symmetric law with two-sided tail
//! `G(t) = P(|x| > t) = min(1, L(t) t^-alpha)` for `t >= support_min`, where the
//! slowly varying factor `L` is either a constant or `c (ln(e + t))^beta`.
//! Sampling is by inversion of `G`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::matrix::SparseMatrix;
use crate::quad::adaptive_simpson;
use crate::seed::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowlyVarying {
    Constant { c: f64 },
    LogPower { c: f64, beta: f64 },
}

impl SlowlyVarying {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            SlowlyVarying::Constant { c } => c,
            SlowlyVarying::LogPower { c, beta } => c * (std::f64::consts::E + t).ln().powf(beta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TailLawParams {
    alpha: f64,
    slowly_varying: SlowlyVarying,
    support_min: f64,
    standardize: bool,
}

/// Symmetric heavy-tailed law with prescribed two-sided tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailLawParams", into = "TailLawParams")]
pub struct TailLaw {
    alpha: f64,
    slowly_varying: SlowlyVarying,
    support_min: f64,
    standardize: bool,
    /// Divisor applied to raw draws: `sqrt(E x^2)` when standardized, else 1.
    scale: f64,
    /// Smallest `t` at which the uncapped tail drops to 1 or below.
    cap: f64,
}

impl TryFrom<TailLawParams> for TailLaw {
    type Error = Error;
    fn try_from(p: TailLawParams) -> Result<Self> {
        TailLaw::new(p.alpha, p.slowly_varying, p.support_min, p.standardize)
    }
}

impl From<TailLaw> for TailLawParams {
    fn from(l: TailLaw) -> Self {
        TailLawParams {
            alpha: l.alpha,
            slowly_varying: l.slowly_varying,
            support_min: l.support_min,
            standardize: l.standardize,
        }
    }
}

impl TailLaw {
    pub fn new(alpha: f64, slowly_varying: SlowlyVarying, support_min: f64, standardize: bool) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(domain(format!("tail exponent must be positive, got {alpha}")));
        }
        if !(support_min.is_finite() && support_min > 0.0) {
            return Err(domain(format!("support_min must be positive, got {support_min}")));
        }
        match slowly_varying {
            SlowlyVarying::Constant { c } if !(c.is_finite() && c > 0.0) => {
                return Err(domain(format!("slowly varying constant must be positive, got {c}")));
            }
            SlowlyVarying::LogPower { c, beta } => {
                if !(c.is_finite() && c > 0.0) || !beta.is_finite() {
                    return Err(domain("log-power factor needs c > 0 and finite beta"));
                }
                // beta <= alpha keeps L(t) t^-alpha strictly decreasing on (0, inf).
                if beta > alpha {
                    return Err(domain(format!("log-power exponent beta = {beta} exceeds alpha = {alpha}")));
                }
            }
            _ => {}
        }
        if standardize && alpha <= 2.0 {
            return Err(Error::InfiniteVariance { alpha });
        }
        let mut law = TailLaw {
            alpha,
            slowly_varying,
            support_min,
            standardize,
            scale: 1.0,
            cap: support_min,
        };
        law.cap = law.find_cap();
        if standardize {
            law.scale = law.variance_unstandardized()?.sqrt();
        }
        Ok(law)
    }

    /// `P(|x| > t) = t^-alpha` on `[1, inf)`.
    pub fn pareto(alpha: f64) -> Result<Self> {
        Self::new(alpha, SlowlyVarying::Constant { c: 1.0 }, 1.0, false)
    }

    /// Symmetric Pareto rescaled to unit variance (requires `alpha > 2`).
    pub fn standardized_pareto(alpha: f64) -> Result<Self> {
        Self::new(alpha, SlowlyVarying::Constant { c: 1.0 }, 1.0, true)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn slowly_varying(&self) -> SlowlyVarying {
        self.slowly_varying
    }
    pub fn support_min(&self) -> f64 {
        self.support_min
    }
    pub fn is_standardized(&self) -> bool {
        self.standardize
    }
    /// Divisor applied to raw draws (1 unless standardized).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    fn uncapped(&self, t: f64) -> f64 {
        self.slowly_varying.eval(t) * t.powf(-self.alpha)
    }

    fn find_cap(&self) -> f64 {
        let s = self.support_min;
        if self.uncapped(s) <= 1.0 {
            return s;
        }
        match self.slowly_varying {
            SlowlyVarying::Constant { c } => {
                let mut t = c.powf(1.0 / self.alpha).max(s);
                while self.uncapped(t) > 1.0 {
                    t = t.next_up();
                }
                t
            }
            SlowlyVarying::LogPower { .. } => self.bisect_raw(1.0),
        }
    }

    /// Tail of the unstandardized variable.
    #[inline]
    pub fn raw_tail(&self, t: f64) -> f64 {
        if t < self.cap {
            1.0
        } else {
            self.uncapped(t).min(1.0)
        }
    }

    /// `P(|x| > t)` of the law as sampled, i.e. on the standardized scale
    /// when standardization is on.
    pub fn tail(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(domain(format!("tail evaluated at non-finite t = {t}")));
        }
        if t <= 0.0 {
            return Ok(1.0);
        }
        Ok(self.raw_tail(t * self.scale))
    }

    /// Smallest `t` with `tail(t) <= u`.
    pub fn quantile_abs(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(domain(format!("quantile level must lie in (0, 1], got {u}")));
        }
        let mut t = self.raw_quantile(u) / self.scale;
        while self.raw_tail(t * self.scale) > u {
            t = t.next_up();
        }
        Ok(t)
    }

    /// Smallest `t` with `raw_tail(t) <= u`, for `u` in `(0, 1]`.
    fn raw_quantile(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return self.cap;
        }
        match self.slowly_varying {
            SlowlyVarying::Constant { c } => {
                let mut t = (c / u).powf(1.0 / self.alpha).max(self.cap);
                while self.raw_tail(t) > u {
                    t = t.next_up();
                }
                t
            }
            SlowlyVarying::LogPower { .. } => {
                if self.raw_tail(self.cap) <= u {
                    self.cap
                } else {
                    self.bisect_raw(u)
                }
            }
        }
    }

    /// Bisects the uncapped tail down to adjacent floats; returns the upper
    /// bracket, which satisfies `uncapped(t) <= u`.
    fn bisect_raw(&self, u: f64) -> f64 {
        let mut lo = self.support_min;
        if self.uncapped(lo) <= u {
            return lo;
        }
        let mut hi = 2.0 * lo;
        while self.uncapped(hi) > u {
            lo = hi;
            hi *= 2.0;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return hi;
            }
            if self.uncapped(mid) > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    /// One symmetric draw: random sign times an inverse-transform magnitude.
    #[inline]
    pub fn sample_entry<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = 1.0 - rng.random::<f64>();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        sign * self.raw_quantile(u) / self.scale
    }

    /// `E[x^2]` of the unstandardized law.
    pub fn variance_unstandardized(&self) -> Result<f64> {
        if self.alpha <= 2.0 {
            return Err(Error::InfiniteVariance { alpha: self.alpha });
        }
        let t0 = self.cap;
        // E x^2 = int_0^inf 2t P(|x| > t) dt, and the tail is 1 below t0.
        match self.slowly_varying {
            SlowlyVarying::Constant { c } => {
                Ok(t0 * t0 + 2.0 * c * t0.powf(2.0 - self.alpha) / (self.alpha - 2.0))
            }
            SlowlyVarying::LogPower { .. } => Ok(t0 * t0 + self.log_scale_second_moment(t0)),
        }
    }

    /// `int_{t0}^inf 2t G(t) dt` after `t = e^s`.
    fn log_scale_second_moment(&self, t0: f64) -> f64 {
        let f = |s: f64| {
            let t = s.exp();
            2.0 * t * t * self.raw_tail(t)
        };
        let a = t0.ln();
        let decay = self.alpha - 2.0;
        let mut b = a + 1.0;
        let mut total = 0.0f64;
        let mut lo = a;
        // Extend the window until the remaining tail, bounded by f(b)/decay
        // up to the slowly varying factor, is negligible.
        for _ in 0..10_000 {
            let piece = adaptive_simpson(&f, lo, b, 1e-14 * (total + 1e-300).max(f(a)));
            total += piece;
            if f(b) / decay * 2.0 < 1e-12 * total {
                break;
            }
            lo = b;
            b += 1.0 + 0.5 * (b - a);
        }
        total
    }
}

/// Free-function spellings of the law operations.
pub fn tail(law: &TailLaw, t: f64) -> Result<f64> {
    law.tail(t)
}
pub fn quantile_abs(law: &TailLaw, u: f64) -> Result<f64> {
    law.quantile_abs(u)
}
pub fn sample_entry<R: Rng + ?Sized>(law: &TailLaw, rng: &mut R) -> f64 {
    law.sample_entry(rng)
}
pub fn variance_unstandardized(law: &TailLaw) -> Result<f64> {
    law.variance_unstandardized()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SparsityKind {
    /// Independent Bernoulli mask with success probability `n^(mu - 1)`.
    Bernoulli,
    /// Nonzero iff `|i - j| <= halfwidth`.
    Band { halfwidth: usize },
    /// Exactly `count` uniformly chosen positions per row (clipped to the row length).
    FixedCountPerRow { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsitySpec {
    pub kind: SparsityKind,
    /// Sparsity exponent, also the nominal exponent for deterministic patterns.
    pub mu: f64,
}

impl SparsitySpec {
    pub fn bernoulli(mu: f64) -> Self {
        SparsitySpec { kind: SparsityKind::Bernoulli, mu }
    }

    pub fn probability(&self, n: usize) -> f64 {
        (n as f64).powf(self.mu - 1.0).min(1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(domain(format!("sparsity exponent mu must lie in [0, 1], got {}", self.mu)));
        }
        match self.kind {
            SparsityKind::Band { halfwidth: 0 } => Err(domain("band halfwidth must be positive")),
            SparsityKind::FixedCountPerRow { count: 0 } => Err(domain("per-row count must be positive")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `p x n` with `p = round(rho n)`.
    Rectangular { n: usize, rho: f64 },
    /// Real symmetric `n x n`.
    Hermitian { n: usize },
}

impl Shape {
    pub fn n(&self) -> usize {
        match *self {
            Shape::Rectangular { n, .. } | Shape::Hermitian { n } => n,
        }
    }

    pub fn p(&self) -> usize {
        match *self {
            Shape::Rectangular { n, rho } => (rho * n as f64).round() as usize,
            Shape::Hermitian { n } => n,
        }
    }

    pub fn rho(&self) -> f64 {
        match *self {
            Shape::Rectangular { rho, .. } => rho,
            Shape::Hermitian { .. } => 1.0,
        }
    }

    pub fn is_hermitian(&self) -> bool {
        matches!(self, Shape::Hermitian { .. })
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(domain("matrix dimension n must be positive"));
        }
        if let Shape::Rectangular { rho, .. } = *self {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(domain(format!("aspect ratio rho must lie in (0, 1], got {rho}")));
            }
            let p = self.p();
            if p < 1 || p > n {
                return Err(domain(format!("p = round(rho n) = {p} must lie in [1, {n}]")));
            }
        }
        Ok(())
    }
}

/// Full recipe for one random matrix draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub shape: Shape,
    pub law: TailLaw,
    pub sparsity: SparsitySpec,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        self.sparsity.validate()
    }

    /// Same recipe, different master seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Column positions of row `i` among `start..end`, drawn from the row's mask stream.
fn mask_row(spec: &EnsembleSpec, i: usize, start: usize, end: usize) -> Vec<usize> {
    let n = spec.shape.n();
    match spec.sparsity.kind {
        SparsityKind::Bernoulli => {
            let prob = spec.sparsity.probability(n);
            if prob >= 1.0 {
                return (start..end).collect();
            }
            // Geometric gaps between successes give the same law as one
            // Bernoulli draw per cell, at a cost proportional to the hits.
            let mut rng = stream(spec.seed, Purpose::Mask, i as u64);
            let log_q = (-prob).ln_1p();
            let mut cols = Vec::new();
            let mut j = start;
            loop {
                let u = 1.0 - rng.random::<f64>();
                let gap = (u.ln() / log_q).floor();
                if gap >= (end - j) as f64 {
                    break;
                }
                j += gap as usize;
                cols.push(j);
                j += 1;
                if j >= end {
                    break;
                }
            }
            cols
        }
        SparsityKind::Band { halfwidth } => {
            let lo = i.saturating_sub(halfwidth).max(start);
            let hi = (i + halfwidth + 1).min(end);
            (lo..hi).collect()
        }
        SparsityKind::FixedCountPerRow { count } => {
            let len = end.saturating_sub(start);
            let k = count.min(len);
            let mut rng = stream(spec.seed, Purpose::Mask, i as u64);
            // Floyd's sampling of k distinct offsets.
            let mut chosen = std::collections::BTreeSet::new();
            for t in (len - k)..len {
                let r = rng.random_range(0..=t);
                if !chosen.insert(r) {
                    chosen.insert(t);
                }
            }
            chosen.into_iter().map(|o| start + o).collect()
        }
    }
}

fn sample_row(spec: &EnsembleSpec, i: usize, start: usize, end: usize) -> Vec<(usize, f64)> {
    let cols = mask_row(spec, i, start, end);
    let mut rng = stream(spec.seed, Purpose::Value, i as u64);
    cols.into_iter().map(|j| (j, spec.law.sample_entry(&mut rng))).collect()
}

/// Draws the matrix described by `spec`.
///
/// Row `i` uses its own mask and value streams, so the output does not
/// depend on generation order. Hermitian draws fill `j >= i` and mirror.
pub fn sample_matrix(spec: &EnsembleSpec) -> Result<SparseMatrix> {
    spec.validate()?;
    let n = spec.shape.n();
    let p = spec.shape.p();
    match spec.shape {
        Shape::Rectangular { .. } => {
            let rows: Vec<Vec<(usize, f64)>> = (0..p).into_par_iter().map(|i| sample_row(spec, i, 0, n)).collect();
            Ok(SparseMatrix::from_sorted_rows(p, n, rows, false))
        }
        Shape::Hermitian { .. } => {
            let upper: Vec<Vec<(usize, f64)>> = (0..n).into_par_iter().map(|i| sample_row(spec, i, i, n)).collect();
            Ok(SparseMatrix::from_upper_rows(n, upper))
        }
    }
}
