//! Symmetric-ensemble experiments: top eigenvalues against the largest
//! entries (with pair-vector eigenvectors) below the threshold, against the
//! semicircle edge above it.

use std::time::Instant;

use super::covariance::{
    common_aggregates, entry_ratios, localization_frequencies, localization_record, put_quantiles, run_spot_check,
    spot_aggregates,
};
use super::{ambiguous, invariant, level_key, Aggregates, ExperimentConfig, ExperimentReport, Ratios, ReplicateRecord, ReportConfig, Verdict};
use crate::error::{Error, Result};
use crate::limits::{c_n, classify_regime, frechet_cdf, IntensityKind, Regime};
use crate::localization::{distance_to_basis_vector, distance_to_pair_vector};
use crate::sampling::sample_matrix;
use crate::spectral::top_eigs;
use crate::stats::{frequency, ks_statistic, mean, median, poisson_count_test};

const PAIR_DISTANCE: f64 = 0.25;

fn hermitian_replicate(cfg: &ExperimentConfig, c: f64, edge: f64, r: usize, seed: u64) -> Result<ReplicateRecord> {
    let start = Instant::now();
    let m = sample_matrix(&cfg.ensemble.with_seed(seed))?;
    let k = cfg.top_k.min(m.rows());
    let spec = top_eigs(&m, k, &cfg.lanczos(seed))?;
    let entries = m.top_entries(k).entries;
    let lambda1 = spec.eigenvalues[0];
    let (norm_inf, norm_one) = m.norms();
    if lambda1 > norm_inf * (1.0 + 1e-9) {
        return Err(invariant(r, format!("lambda1 = {lambda1} exceeds ||M||_inf = {norm_inf}")));
    }
    let max_diag = (0..m.rows()).map(|i| m.get(i, i)).fold(f64::NEG_INFINITY, f64::max);
    if spec.converged && lambda1 < max_diag - 1e-9 * max_diag.abs() {
        return Err(invariant(r, format!("lambda1 = {lambda1} below the largest diagonal entry {max_diag}")));
    }

    let mut ratios = Ratios::default();
    let mut distances = Vec::with_capacity(k);
    for (l, &lam) in spec.eigenvalues.iter().enumerate() {
        ratios.edge.push(lam / edge);
        ratios.points.push(lam / c);
        if let Some(e) = entries.get(l) {
            ratios.entry.push(lam / e.magnitude);
            let v = &spec.eigenvectors[l];
            let d = if e.i == e.j { distance_to_basis_vector(v, e.i)? } else { distance_to_pair_vector(v, e.i, e.j, e.theta)? };
            distances.push(d);
        }
    }
    let localization = localization_record(cfg, &spec.eigenvectors[0], distances)?;
    Ok(ReplicateRecord {
        r,
        eigs: spec.eigenvalues,
        ambiguous_pairing: ambiguous(&entries),
        entries,
        ratios,
        localization,
        norm_inf,
        norm_one,
        esd_ks: None,
        converged: spec.converged,
        truncation: None,
        elapsed: start.elapsed(),
    })
}

/// Runs the symmetric ensemble in whichever regime `alpha` and `mu` select.
pub fn run_hermitian_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if !cfg.ensemble.shape.is_hermitian() {
        return Err(Error::RegimeMismatch("the Hermitian experiment needs the symmetric ensemble".into()));
    }
    let regime = classify_regime(cfg.alpha(), cfg.mu())?;
    if regime == Regime::Critical {
        return Err(Error::RegimeMismatch(format!(
            "alpha = {} sits exactly on the threshold for mu = {}; no limit to compare with",
            cfg.alpha(),
            cfg.mu()
        )));
    }
    if regime == Regime::Edge && !cfg.ensemble.law.is_standardized() {
        return Err(Error::Hypothesis("the edge regime needs a unit-variance law".into()));
    }
    let n = cfg.ensemble.shape.n();
    let c = c_n(&cfg.ensemble.law, n, cfg.mu())?;
    let bulk = (n as f64).powf(cfg.mu() / 2.0);
    let records = cfg.map_replicates(|r, seed| hermitian_replicate(cfg, c, 2.0 * bulk, r, seed))?;
    let spot = run_spot_check(cfg)?;

    let mut agg = Aggregates::default();
    common_aggregates(&mut agg, &records);
    agg.put("c_n", Some(c));
    for l in 0..cfg.top_k {
        put_quantiles(&mut agg, &format!("ratio_entry_{}", l + 1), &entry_ratios(&records, l));
        let scaled: Vec<f64> = records.iter().filter_map(|r| r.eigs.get(l)).map(|x| x / bulk).collect();
        put_quantiles(&mut agg, &format!("lambda_{}_over_n_half_mu", l + 1), &scaled);
    }
    let d1: Vec<f64> = records.iter().filter_map(|r| r.localization.distances.first().copied()).collect();
    put_quantiles(&mut agg, "pair_dist_1", &d1);
    let pair_freq = frequency(d1.iter().map(|&d| d <= PAIR_DISTANCE));
    agg.put("pair_dist_1_freq_le_0.25", Some(pair_freq));
    localization_frequencies(&mut agg, cfg, &records);

    let mut verdicts = Vec::new();
    match regime {
        Regime::Poissonian => {
            let first: Vec<f64> = records.iter().map(|r| r.ratios.points[0]).collect();
            agg.put("ks_frechet", Some(ks_statistic(&first, |t| frechet_cdf(t, cfg.alpha()))?));
            let positive: Vec<Vec<f64>> =
                records.iter().map(|r| r.ratios.points.iter().copied().filter(|&x| x > 0.0).collect()).collect();
            for cnt in poisson_count_test(&positive, &cfg.thresholds, cfg.alpha(), IntensityKind::Hermitian)? {
                let key = level_key(cnt.threshold);
                agg.put(format!("count_above_{key}_mean"), Some(cnt.mean));
                agg.put(format!("count_above_{key}_expected"), Some(cnt.expected));
                agg.put(format!("count_above_{key}_z"), Some(cnt.z_score));
            }
            let med = median(&entry_ratios(&records, 0)).unwrap_or(f64::NAN);
            verdicts.push(Verdict::range("median lambda_1 / |m_1|", med, 0.9, 1.1));
            verdicts.push(Verdict::at_least("fraction with pair-vector distance <= 0.25", pair_freq, 0.75));
        }
        _ => {
            let scaled: Vec<f64> = records.iter().map(|r| r.eigs[0] / bulk).collect();
            let m = mean(&scaled).unwrap_or(f64::NAN);
            verdicts.push(Verdict::range("mean lambda_1 / n^(mu/2)", m, 1.7, 2.3));
        }
    }
    verdicts.push(spot_aggregates(&mut agg, cfg, &spot));
    Ok(ExperimentReport {
        config: ReportConfig { experiment: "hermitian".into(), base: cfg.clone(), truncation: None },
        replicates: records,
        aggregates: agg.into_map(),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SparseMatrix;
    use crate::spectral::LanczosOptions;

    #[test]
    fn planted_pair_gives_pair_vector() {
        let v = 1e3;
        let mut t = vec![(1, 4, v)];
        for i in 0..8 {
            for j in i..8 {
                if (i, j) != (1, 4) && (i * 3 + j) % 4 == 0 {
                    t.push((i, j, 1e-3 * (1.0 + j as f64)));
                }
            }
        }
        let m = SparseMatrix::from_triplets(8, 8, t.clone(), true).unwrap();
        let spec = top_eigs(&m, 1, &LanczosOptions::default()).unwrap();
        assert!(distance_to_pair_vector(&spec.eigenvectors[0], 1, 4, 0.0).unwrap() <= 1e-3);
        t[0].2 = -v;
        let m = SparseMatrix::from_triplets(8, 8, t, true).unwrap();
        let spec = top_eigs(&m, 1, &LanczosOptions::default()).unwrap();
        assert!(distance_to_pair_vector(&spec.eigenvectors[0], 1, 4, std::f64::consts::PI).unwrap() <= 1e-3);
    }

    #[test]
    fn guards() {
        let cfg = ExperimentConfig::covariance(1.0, 1.0, 1.0, 20).unwrap().with_replicates(2);
        assert!(matches!(run_hermitian_experiment(&cfg), Err(Error::RegimeMismatch(_))));
        let cfg = ExperimentConfig::hermitian(4.0, 1.0, 20).unwrap().with_replicates(2);
        assert!(matches!(run_hermitian_experiment(&cfg), Err(Error::RegimeMismatch(_))));
    }

    #[test]
    fn small_runs() {
        let cfg = ExperimentConfig::hermitian(1.0, 1.0, 40).unwrap().with_replicates(4);
        let rep = run_hermitian_experiment(&cfg).unwrap();
        assert_eq!(rep.verdicts.len(), 3);
        let cfg = ExperimentConfig::hermitian(8.0, 1.0, 40).unwrap().with_replicates(2);
        let rep = run_hermitian_experiment(&cfg).unwrap();
        assert_eq!(rep.verdicts.len(), 2);
    }
}
