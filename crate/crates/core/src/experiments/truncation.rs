//! Operator norm of the entrywise truncation `M_hat` and the size of the
//! remainder `M'`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::covariance::{common_aggregates, put_quantiles};
use super::{invariant, Aggregates, ExperimentConfig, ExperimentReport, ReplicateRecord, ReportConfig, Verdict};
use crate::error::{domain, Error, Result};
use crate::limits::mp_edges;
use crate::sampling::sample_matrix;
use crate::spectral::top_eigs;
use crate::stats::frequency;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    /// Truncation level exponent: entries above `n^gamma` go to `M'`.
    pub gamma: f64,
    /// Norm scale exponent.
    pub gamma_prime: f64,
    pub kappa: f64,
}

impl TruncationParams {
    /// `gamma' = mu / 2` and `gamma` halfway through `(mu / (2 (alpha - 1)), mu / 2)`.
    pub fn defaults_for(alpha: f64, mu: f64) -> Self {
        let lo = mu / (2.0 * (alpha - 1.0));
        TruncationParams { gamma: 0.5 * (lo + mu / 2.0), gamma_prime: mu / 2.0, kappa: 1.5 }
    }

    fn check(&self, cfg: &ExperimentConfig) -> Result<()> {
        let (alpha, mu) = (cfg.alpha(), cfg.mu());
        if !(alpha > 2.0) {
            return Err(Error::Hypothesis(format!("alpha > 2 fails: alpha = {alpha}")));
        }
        if !cfg.ensemble.law.is_standardized() {
            return Err(Error::Hypothesis("the law must have unit variance".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Hypothesis(format!("gamma > 0 fails: gamma = {}", self.gamma)));
        }
        if !(self.gamma_prime > self.gamma) {
            return Err(Error::Hypothesis(format!("gamma' > gamma fails: {} <= {}", self.gamma_prime, self.gamma)));
        }
        if !(self.gamma_prime >= mu / 2.0) {
            return Err(Error::Hypothesis(format!("gamma' >= mu/2 fails: {} < {}", self.gamma_prime, mu / 2.0)));
        }
        if !(self.kappa > 0.0) {
            return Err(domain(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRecord {
    pub level: f64,
    /// `||M_hat M_hat^T||`.
    pub hat_norm: f64,
    /// `kappa n^(2 gamma') (1 + sqrt rho)^2`.
    pub threshold: f64,
    pub exceeds: bool,
    pub prime_nnz: usize,
    pub hat_inf: f64,
    pub prime_inf: f64,
    pub prime_one: f64,
    /// `||M'||_inf / |m_1|`; absent when `M'` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_one: Option<f64>,
}

/// Splits each replicate at `n^gamma` and records the truncated norm and the
/// remainder norms.
pub fn run_truncation_experiment(cfg: &ExperimentConfig, params: TruncationParams) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.ensemble.shape.is_hermitian() {
        return Err(Error::RegimeMismatch("the truncation experiment needs the rectangular ensemble".into()));
    }
    params.check(cfg)?;
    let shape = cfg.ensemble.shape;
    let n = shape.n() as f64;
    let level = n.powf(params.gamma);
    let threshold = params.kappa * n.powf(2.0 * params.gamma_prime) * mp_edges(shape.rho())?.1;

    let records = cfg.map_replicates(|r, seed| {
        let start = Instant::now();
        let m = sample_matrix(&cfg.ensemble.with_seed(seed))?;
        let split = m.truncate_split(level)?;
        let (hat_norm, converged) = if split.hat.nnz() == 0 {
            (0.0, true)
        } else {
            let s = top_eigs(&split.hat, 1, &cfg.lanczos(seed))?;
            (s.eigenvalues[0], s.converged)
        };
        let (full_inf, full_one) = m.norms();
        let (hat_inf, _) = split.hat.norms();
        let (prime_inf, prime_one) = split.prime.norms();
        if hat_inf + prime_inf < full_inf * (1.0 - 1e-12) {
            return Err(invariant(r, format!("||M_hat||_inf + ||M'||_inf = {} < ||M||_inf = {full_inf}", hat_inf + prime_inf)));
        }
        let top = m.top_entries(1).entries;
        let m1 = top.first().map_or(0.0, |e| e.magnitude);
        let nonempty = split.prime.nnz() > 0;
        let rec = TruncationRecord {
            level,
            hat_norm,
            threshold,
            exceeds: hat_norm >= threshold,
            prime_nnz: split.prime.nnz(),
            hat_inf,
            prime_inf,
            prime_one,
            ratio_inf: nonempty.then(|| prime_inf / m1),
            ratio_one: nonempty.then(|| prime_one / m1),
        };
        Ok(ReplicateRecord {
            r,
            eigs: vec![hat_norm],
            entries: top,
            ratios: Default::default(),
            localization: Default::default(),
            norm_inf: full_inf,
            norm_one: full_one,
            esd_ks: None,
            ambiguous_pairing: false,
            converged,
            truncation: Some(rec),
            elapsed: start.elapsed(),
        })
    })?;

    let tr: Vec<TruncationRecord> = records.iter().filter_map(|r| r.truncation).collect();
    let mut agg = Aggregates::default();
    common_aggregates(&mut agg, &records);
    agg.put("level", Some(level));
    agg.put("threshold", Some(threshold));
    let exceed = frequency(tr.iter().map(|t| t.exceeds));
    agg.put("exceedance_freq", Some(exceed));
    put_quantiles(&mut agg, "hat_norm_over_threshold", &tr.iter().map(|t| t.hat_norm / threshold).collect::<Vec<_>>());
    let inf_ratios: Vec<f64> = tr.iter().filter_map(|t| t.ratio_inf).collect();
    put_quantiles(&mut agg, "prime_inf_ratio", &inf_ratios);
    put_quantiles(&mut agg, "prime_one_ratio", &tr.iter().filter_map(|t| t.ratio_one).collect::<Vec<_>>());
    agg.put("prime_empty", Some(tr.iter().filter(|t| t.prime_nnz == 0).count() as f64));
    let inf_ok = frequency(tr.iter().map(|t| t.ratio_inf.is_none_or(|x| x <= 1.2)));
    agg.put("prime_inf_ratio_freq_le_1.2", Some(inf_ok));

    let verdicts = vec![
        Verdict::at_most("frequency of ||M_hat M_hat^T|| >= kappa n^(2 gamma') (1 + sqrt rho)^2", exceed, 0.05),
        Verdict::at_least("fraction with ||M'||_inf / |m_1| <= 1.2", inf_ok, 0.9),
    ];
    Ok(ExperimentReport {
        config: ReportConfig { experiment: "truncation".into(), base: cfg.clone(), truncation: Some(params) },
        replicates: records,
        aggregates: agg.into_map(),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_exponents() {
        let p = TruncationParams::defaults_for(8.0, 1.0);
        assert_eq!(p.gamma_prime, 0.5);
        assert!((p.gamma - 0.5 * (1.0 / 14.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn hypotheses_are_named() {
        let cfg = ExperimentConfig::covariance(8.0, 1.0, 1.0, 30).unwrap().with_replicates(2);
        let bad = TruncationParams { gamma: 0.5, gamma_prime: 0.4, kappa: 1.5 };
        let err = run_truncation_experiment(&cfg, bad).unwrap_err().to_string();
        assert!(err.contains("gamma' > gamma"), "{err}");
        let bad = TruncationParams { gamma: 0.1, gamma_prime: 0.3, kappa: 1.5 };
        let err = run_truncation_experiment(&cfg, bad).unwrap_err().to_string();
        assert!(err.contains("gamma' >= mu/2"), "{err}");
        let cfg = ExperimentConfig::covariance(1.5, 1.0, 1.0, 30).unwrap().with_replicates(2);
        let err = run_truncation_experiment(&cfg, TruncationParams::defaults_for(1.5, 1.0)).unwrap_err().to_string();
        assert!(err.contains("alpha > 2"), "{err}");
    }

    #[test]
    fn level_above_every_entry_leaves_empty_remainder() {
        let cfg = ExperimentConfig::covariance(8.0, 1.0, 1.0, 30).unwrap().with_replicates(3);
        let params = TruncationParams { gamma: 0.9, gamma_prime: 1.0, kappa: 1.5 };
        let rep = run_truncation_experiment(&cfg, params).unwrap();
        for rec in &rep.replicates {
            let t = rec.truncation.unwrap();
            assert_eq!(t.prime_nnz, 0);
            assert!(t.ratio_inf.is_none() && t.ratio_one.is_none());
        }
        assert!(rep.verdicts[1].pass);
    }
}
