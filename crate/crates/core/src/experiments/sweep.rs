//! Grid over `(alpha, mu)` locating the empirical phase boundary.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::covariance::{covariance_replicate, Normalization};
use super::{derive_replicate_seed, with_workers, ExperimentConfig};
use crate::error::{domain, Result};
use crate::limits::{classify_regime, regime_threshold, Regime};
use crate::stats::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub mus: Vec<f64>,
    pub n: usize,
    pub rho: f64,
    pub replicates: usize,
    pub top_k: usize,
    pub master_seed: u64,
    pub tol: f64,
    pub max_iter: Option<usize>,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl SweepConfig {
    pub fn new(alphas: Vec<f64>, mus: Vec<f64>, n: usize) -> Self {
        SweepConfig { alphas, mus, n, rho: 1.0, replicates: 10, top_k: 1, master_seed: 0, tol: 1e-10, max_iter: None, workers: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub mu: f64,
    /// `2 (1 + 1/mu)`, absent for `mu = 0`.
    pub threshold: Option<f64>,
    pub regime: Regime,
    pub median_ratio_entry: f64,
    pub median_ratio_edge: f64,
    pub median_loc_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha,mu,threshold,regime,median_ratio_entry,median_ratio_edge,median_loc_dist")?;
        for c in &self.cells {
            let t = c.threshold.map_or(String::new(), |t| t.to_string());
            writeln!(
                w,
                "{},{},{},{:?},{},{},{}",
                c.alpha, c.mu, t, c.regime, c.median_ratio_entry, c.median_ratio_edge, c.median_loc_dist
            )?;
        }
        Ok(())
    }
}

/// `lo:hi:step` (inclusive of `hi` up to rounding) or a single number.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| domain(format!("bad number {t:?} in grid {s:?}")));
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(domain(format!("grid {s:?} needs lo <= hi and step > 0")));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > 10_000 {
                return Err(domain(format!("grid {s:?} has {count} points")));
            }
            Ok((0..count).map(|k| lo + k as f64 * step).collect())
        }
        _ => Err(domain(format!("grid {s:?} must look like lo:hi:step"))),
    }
}

/// One cell per `(alpha, mu)`, alphas varying slowest.
pub fn run_phase_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.alphas.is_empty() || cfg.mus.is_empty() {
        return Err(domain("sweep grid is empty"));
    }
    let grid: Vec<(f64, f64)> = cfg.alphas.iter().flat_map(|&a| cfg.mus.iter().map(move |&m| (a, m))).collect();
    let mut cells = Vec::with_capacity(grid.len());
    for (idx, &(alpha, mu)) in grid.iter().enumerate() {
        let mut ec = ExperimentConfig::covariance(alpha, mu, cfg.rho, cfg.n)?
            .with_replicates(cfg.replicates)
            .with_seed(derive_replicate_seed(cfg.master_seed, idx as u64));
        ec.top_k = cfg.top_k;
        ec.tol = cfg.tol;
        ec.max_iter = cfg.max_iter;
        ec.validate()?;
        let norm = Normalization::of(&ec)?;
        let recs = with_workers(cfg.workers, || ec.map_replicates(|r, seed| covariance_replicate(&ec, &norm, r, seed, false)))??;
        let pick = |f: &dyn Fn(&super::ReplicateRecord) -> Option<f64>| median(&recs.iter().filter_map(f).collect::<Vec<_>>()).unwrap_or(f64::NAN);
        cells.push(SweepCell {
            alpha,
            mu,
            threshold: regime_threshold(mu),
            regime: classify_regime(alpha, mu)?,
            median_ratio_entry: pick(&|r| r.ratios.entry.first().copied()),
            median_ratio_edge: pick(&|r| r.ratios.edge.first().copied()),
            median_loc_dist: pick(&|r| r.localization.distances.first().copied()),
        });
    }
    Ok(SweepReport { config: cfg.clone(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap().len(), 3);
        assert_eq!(parse_grid("4").unwrap(), vec![4.0]);
        assert!(parse_grid("2:1:0.5").is_err());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn cell_count_and_regimes() {
        let mut cfg = SweepConfig::new(vec![1.0, 8.0], vec![0.5, 1.0], 40);
        cfg.replicates = 2;
        let rep = run_phase_sweep(&cfg).unwrap();
        assert_eq!(rep.cells.len(), 4);
        assert_eq!(rep.cells[0].regime, Regime::Poissonian);
        assert_eq!(rep.cells[3].regime, Regime::Edge);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
