//! Replicated experiments at fixed size: configuration, per-replicate
//! records, aggregation and verdicts.

mod covariance;
mod hermitian;
mod sweep;
mod truncation;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Duration;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::matrix::RankedEntry;
use crate::sampling::{EnsembleSpec, Shape, SparsitySpec, TailLaw};
use crate::seed::{stream, Purpose};
use crate::spectral::{check_interlacing_values, InterlacingMode, InterlacingReport, LanczosOptions};

pub use crate::seed::derive_replicate_seed;
pub use covariance::{run_edge_experiment, run_poisson_experiment};
pub use hermitian::run_hermitian_experiment;
pub use sweep::{parse_grid, run_phase_sweep, SweepCell, SweepConfig, SweepReport};
pub use truncation::{run_truncation_experiment, TruncationParams, TruncationRecord};

/// Support sizes `L = floor(p^beta)` probed for localization.
pub const DEFAULT_BETAS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSpec,
    pub replicates: usize,
    pub top_k: usize,
    /// Levels for the point-process counts.
    pub thresholds: Vec<f64>,
    pub master_seed: u64,
    /// Lanczos residual tolerance.
    pub tol: f64,
    /// Lanczos iteration cap; `None` uses the solver default.
    pub max_iter: Option<usize>,
    /// Largest dimension for which full spectra are computed.
    pub dense_limit: usize,
    pub esd_bins: usize,
    pub betas: Vec<f64>,
    pub eta: f64,
    /// Worker cap; `None` uses the global pool.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(ensemble: EnsembleSpec) -> Self {
        ExperimentConfig {
            ensemble,
            replicates: 100,
            top_k: 5,
            thresholds: vec![0.5, 1.0, 2.0, 4.0],
            master_seed: 0,
            tol: 1e-10,
            max_iter: None,
            dense_limit: crate::spectral::DEFAULT_DENSE_LIMIT,
            esd_bins: 60,
            betas: DEFAULT_BETAS.to_vec(),
            eta: 0.3,
            workers: None,
        }
    }

    /// Rectangular ensemble with a symmetric Pareto law, standardized when
    /// `alpha > 2`.
    pub fn covariance(alpha: f64, mu: f64, rho: f64, n: usize) -> Result<Self> {
        Ok(Self::new(EnsembleSpec {
            shape: Shape::Rectangular { n, rho },
            law: default_law(alpha)?,
            sparsity: SparsitySpec::bernoulli(mu),
            seed: 0,
        }))
    }

    /// Symmetric ensemble with the same law choice as [`Self::covariance`].
    pub fn hermitian(alpha: f64, mu: f64, n: usize) -> Result<Self> {
        Ok(Self::new(EnsembleSpec {
            shape: Shape::Hermitian { n },
            law: default_law(alpha)?,
            sparsity: SparsitySpec::bernoulli(mu),
            seed: 0,
        }))
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.ensemble.law.alpha()
    }

    pub fn mu(&self) -> f64 {
        self.ensemble.sparsity.mu
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        let p = self.ensemble.shape.p();
        if self.replicates == 0 {
            return Err(domain("need at least one replicate"));
        }
        if self.top_k == 0 || self.top_k > p.min(50) {
            return Err(domain(format!("top_k = {} must lie in 1..={}", self.top_k, p.min(50))));
        }
        if !(self.tol >= 1e-12) {
            return Err(domain(format!("tolerance {} below 1e-12", self.tol)));
        }
        if self.thresholds.iter().any(|&x| !(x > 0.0)) {
            return Err(domain("count thresholds must be positive"));
        }
        if self.betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(domain("localization exponents must lie in (0, 1)"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(domain(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.esd_bins == 0 {
            return Err(domain("need at least one ESD bin"));
        }
        if self.workers == Some(0) {
            return Err(domain("worker count must be positive"));
        }
        Ok(())
    }

    pub(crate) fn lanczos(&self, seed: u64) -> LanczosOptions {
        LanczosOptions { tol: self.tol, max_iter: self.max_iter, seed }
    }

    /// Runs `f(r, seed_r)` for every replicate, in parallel, keyed by index.
    pub(crate) fn map_replicates<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, u64) -> Result<T> + Sync,
    {
        let work = || {
            (0..self.replicates)
                .into_par_iter()
                .map(|r| f(r, derive_replicate_seed(self.master_seed, r as u64)))
                .collect::<Result<Vec<T>>>()
        };
        with_workers(self.workers, work)?
    }

    /// Replicate chosen for the interlacing spot-check.
    pub(crate) fn spot_replicate(&self) -> usize {
        stream(self.master_seed, Purpose::Spot, 0).random_range(0..self.replicates)
    }
}

pub(crate) fn with_workers<T: Send>(workers: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| domain(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

/// Symmetric Pareto law, standardized when `alpha > 2`.
pub fn default_law(alpha: f64) -> Result<TailLaw> {
    if alpha > 2.0 {
        TailLaw::standardized_pareto(alpha)
    } else {
        TailLaw::pareto(alpha)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    /// `lambda_l / |m_l|^2` (covariance) or `lambda_l / |m_l|` (symmetric).
    pub entry: Vec<f64>,
    /// `lambda_l / ((1 + sqrt rho)^2 n^mu)` or `lambda_l / (2 n^(mu/2))`.
    pub edge: Vec<f64>,
    /// Eigenvalues in units of the largest-entry scale.
    pub points: Vec<f64>,
    /// `||r_l|| / c^2` for the planted basis vectors (covariance only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassAt {
    pub beta: f64,
    pub l: usize,
    pub mass: f64,
    pub localized: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRecord {
    /// Distance of `v_l` to the vector predicted by the entry of rank `l`.
    pub distances: Vec<f64>,
    /// Top-`L` mass of `v_1` at each probed support size.
    pub masses: Vec<MassAt>,
    pub ipr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub r: usize,
    pub eigs: Vec<f64>,
    pub entries: Vec<RankedEntry>,
    pub ratios: Ratios,
    pub localization: LocalizationRecord,
    pub norm_inf: f64,
    pub norm_one: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esd_ks: Option<f64>,
    /// Consecutive ranked entries within 1e-6 relative of each other.
    pub ambiguous_pairing: bool,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationRecord>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub observed: f64,
    pub target: String,
    pub pass: bool,
}

impl Verdict {
    fn range(criterion: &str, observed: f64, lo: f64, hi: f64) -> Self {
        Verdict {
            criterion: criterion.to_string(),
            observed,
            target: format!("[{lo}, {hi}]"),
            pass: observed >= lo && observed <= hi,
        }
    }
    fn at_most(criterion: &str, observed: f64, bound: f64) -> Self {
        Verdict { criterion: criterion.to_string(), observed, target: format!("<= {bound}"), pass: observed <= bound }
    }
    fn at_least(criterion: &str, observed: f64, bound: f64) -> Self {
        Verdict { criterion: criterion.to_string(), observed, target: format!(">= {bound}"), pass: observed >= bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub experiment: String,
    #[serde(flatten)]
    pub base: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ReportConfig,
    pub replicates: Vec<ReplicateRecord>,
    /// Named summary statistics; every value is finite.
    pub aggregates: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Canonical JSON; timing is not part of it.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn total_elapsed(&self) -> Duration {
        self.replicates.iter().map(|r| r.elapsed).sum()
    }

    /// One line per replicate under the header
    /// `r,lambda1,entry1_sq,ratio_entry,ratio_edge,loc_dist,norm_inf,norm_one`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,lambda1,entry1_sq,ratio_entry,ratio_edge,loc_dist,norm_inf,norm_one")?;
        let opt = |x: Option<&f64>| x.map_or(String::new(), |v| v.to_string());
        for rec in &self.replicates {
            let entry1_sq = rec.entries.first().map(|e| e.magnitude * e.magnitude);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                rec.r,
                opt(rec.eigs.first()),
                opt(entry1_sq.as_ref()),
                opt(rec.ratios.entry.first()),
                opt(rec.ratios.edge.first()),
                opt(rec.localization.distances.first()),
                rec.norm_inf,
                rec.norm_one
            )?;
        }
        Ok(())
    }
}

/// Accumulates finite aggregate values under stable names.
#[derive(Default)]
pub(crate) struct Aggregates(BTreeMap<String, f64>);

impl Aggregates {
    pub(crate) fn put(&mut self, key: impl Into<String>, value: Option<f64>) {
        if let Some(v) = value.filter(|v| v.is_finite()) {
            self.0.insert(key.into(), v);
        }
    }
    pub(crate) fn into_map(self) -> BTreeMap<String, f64> {
        self.0
    }
}

/// Flags rankings whose consecutive magnitudes are within 1e-6 relative.
pub(crate) fn ambiguous(entries: &[RankedEntry]) -> bool {
    entries.windows(2).any(|w| w[0].magnitude - w[1].magnitude <= 1e-6 * w[0].magnitude)
}

/// Interlacing of the top parts of two spectra, parent `k` values against
/// minor `k - 1` values.
pub(crate) fn prefix_interlacing(parent: &[f64], minor: &[f64], mode: InterlacingMode) -> Result<InterlacingReport> {
    let k = parent.len().min(minor.len() + 1);
    check_interlacing_values(&parent[..k], &minor[..k.saturating_sub(1)], mode)
}

pub(crate) fn invariant(replicate: usize, what: String) -> Error {
    Error::Invariant { replicate, what }
}

/// Key suffix for a threshold, e.g. `1` or `0.5`.
pub(crate) fn level_key(x: f64) -> String {
    format!("{x}")
}
