//! Rectangular-ensemble experiments: the Poissonian regime (eigenvalues track
//! squared top entries) and the edge regime (eigenvalues stick to the
//! Marchenko–Pastur edge).

use std::time::Instant;

use rand::Rng;

use super::{
    ambiguous, invariant, level_key, prefix_interlacing, Aggregates, ExperimentConfig, ExperimentReport,
    LocalizationRecord, MassAt, Ratios, ReplicateRecord, ReportConfig, Verdict,
};
use crate::error::{Error, Result};
use crate::limits::{c_np, classify_regime, frechet_cdf, mp_edges, IntensityKind, Regime};
use crate::localization::{distance_to_basis_vector, inverse_participation_ratio, top_mass};
use crate::matrix::SparseMatrix;
use crate::sampling::sample_matrix;
use crate::seed::{stream, Purpose};
use crate::spectral::{
    eigvals_dense_symmetric, norm_bounds, residual_vector, top_eigs, InterlacingMode, InterlacingReport,
};
use crate::stats::{counts_above, esd, frequency, ks_statistic, mean, median, poisson_count_test, quantile, std_dev};

/// Distance below which `v_1` counts as matching its basis vector.
const LOC_DISTANCE: f64 = 0.2;

pub(super) struct Normalization {
    /// Largest-entry scale `c_np`.
    pub c: f64,
    /// `(1 + sqrt rho)^2 n^mu`.
    pub edge: f64,
    /// `n^mu`, the ESD scale.
    pub bulk: f64,
}

impl Normalization {
    pub(super) fn of(cfg: &ExperimentConfig) -> Result<Self> {
        let shape = cfg.ensemble.shape;
        let (n, p, rho, mu) = (shape.n(), shape.p(), shape.rho(), cfg.mu());
        let bulk = (n as f64).powf(mu);
        let (_, hi) = mp_edges(rho)?;
        Ok(Normalization { c: c_np(&cfg.ensemble.law, n, p, mu)?, edge: hi * bulk, bulk })
    }
}

/// Everything measured on one rectangular draw.
pub(super) fn covariance_replicate(
    cfg: &ExperimentConfig,
    norm: &Normalization,
    r: usize,
    seed: u64,
    with_esd: bool,
) -> Result<ReplicateRecord> {
    let start = Instant::now();
    let m = sample_matrix(&cfg.ensemble.with_seed(seed))?;
    let p = m.rows();
    let k = cfg.top_k.min(p);
    let spec = top_eigs(&m, k, &cfg.lanczos(seed))?;
    let entries = m.top_entries(k).entries;
    let lambda1 = spec.eigenvalues[0];

    let bounds = norm_bounds(&m, lambda1)?;
    if !bounds.norm_holds {
        return Err(invariant(r, format!("lambda1 = {lambda1} exceeds ||M||_inf ||M||_1 = {}", bounds.norm_product)));
    }
    if spec.converged && !bounds.rayleigh_holds {
        return Err(invariant(r, format!("lambda1 = {lambda1} below the largest row mass {}", bounds.max_row_mass)));
    }

    let c2 = norm.c * norm.c;
    let mut ratios = Ratios::default();
    let mut distances = Vec::with_capacity(k);
    for (l, &lam) in spec.eigenvalues.iter().enumerate() {
        ratios.edge.push(lam / norm.edge);
        ratios.points.push(lam / c2);
        if let Some(e) = entries.get(l) {
            ratios.entry.push(lam / (e.magnitude * e.magnitude));
            distances.push(distance_to_basis_vector(&spec.eigenvectors[l], e.i)?);
            ratios.residual.push(residual_vector(&m, l + 1)?.norm / c2);
        }
    }
    let localization = localization_record(cfg, &spec.eigenvectors[0], distances)?;
    let (norm_inf, norm_one) = m.norms();

    let esd_ks = if with_esd && p <= cfg.dense_limit {
        let full = eigvals_dense_symmetric(&m.gram_dense())?;
        Some(esd(&full, norm.bulk, cfg.ensemble.shape.rho(), cfg.esd_bins)?.ks_mp)
    } else {
        None
    };

    Ok(ReplicateRecord {
        r,
        eigs: spec.eigenvalues,
        ambiguous_pairing: ambiguous(&entries),
        entries,
        ratios,
        localization,
        norm_inf,
        norm_one,
        esd_ks,
        converged: spec.converged,
        truncation: None,
        elapsed: start.elapsed(),
    })
}

pub(super) fn localization_record(cfg: &ExperimentConfig, v1: &[f64], distances: Vec<f64>) -> Result<LocalizationRecord> {
    let dim = v1.len() as f64;
    let masses = cfg
        .betas
        .iter()
        .map(|&beta| {
            let l = (dim.powf(beta).floor() as usize).max(1);
            let mass = top_mass(v1, l)?;
            Ok(MassAt { beta, l, mass, localized: mass > 1.0 - cfg.eta })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalizationRecord { distances, masses, ipr: inverse_participation_ratio(v1) })
}

/// Row-deletion interlacing on one replicate, dense when small enough.
pub(super) fn spot_check(cfg: &ExperimentConfig, m: &SparseMatrix, seed: u64) -> Result<InterlacingReport> {
    let mode = if m.is_symmetric() { InterlacingMode::HermitianMinor } else { InterlacingMode::RowDeletion };
    let row = stream(seed, Purpose::Spot, 1).random_range(0..m.rows());
    if m.rows() <= cfg.dense_limit {
        return crate::spectral::check_interlacing(m, mode, row);
    }
    let minor = if m.is_symmetric() { m.principal_minor(row) } else { m.delete_row(row) };
    let k = cfg.top_k.min(m.rows());
    let parent = top_eigs(m, k, &cfg.lanczos(seed))?;
    let child = top_eigs(&minor, (k - 1).max(1).min(minor.rows()), &cfg.lanczos(seed))?;
    prefix_interlacing(&parent.eigenvalues, &child.eigenvalues, mode)
}

fn require_rectangular(cfg: &ExperimentConfig, what: &str) -> Result<()> {
    if cfg.ensemble.shape.is_hermitian() {
        return Err(Error::RegimeMismatch(format!("{what} needs the rectangular ensemble")));
    }
    Ok(())
}

pub(super) fn spot_aggregates(agg: &mut Aggregates, cfg: &ExperimentConfig, report: &InterlacingReport) -> Verdict {
    agg.put("spot_check_replicate", Some(cfg.spot_replicate() as f64));
    agg.put("spot_check_max_violation", Some(report.max_violation));
    Verdict {
        criterion: "row-deletion interlacing on the spot-check replicate".into(),
        observed: report.max_violation,
        target: "no violation".into(),
        pass: report.holds,
    }
}

pub(super) fn run_spot_check(cfg: &ExperimentConfig) -> Result<InterlacingReport> {
    let r = cfg.spot_replicate();
    let seed = super::derive_replicate_seed(cfg.master_seed, r as u64);
    let m = sample_matrix(&cfg.ensemble.with_seed(seed))?;
    spot_check(cfg, &m, seed)
}

pub(super) fn put_quantiles(agg: &mut Aggregates, name: &str, values: &[f64]) {
    agg.put(format!("{name}_mean"), mean(values));
    agg.put(format!("{name}_std"), std_dev(values));
    agg.put(format!("{name}_q10"), quantile(values, 0.1));
    agg.put(format!("{name}_median"), median(values));
    agg.put(format!("{name}_q90"), quantile(values, 0.9));
}

pub(super) fn common_aggregates(agg: &mut Aggregates, records: &[ReplicateRecord]) {
    agg.put("replicates", Some(records.len() as f64));
    agg.put("not_converged", Some(records.iter().filter(|r| !r.converged).count() as f64));
    agg.put("ambiguous_pairings", Some(records.iter().filter(|r| r.ambiguous_pairing).count() as f64));
}

/// Localization frequency of `v_1` at each probed exponent.
pub(super) fn localization_frequencies(agg: &mut Aggregates, cfg: &ExperimentConfig, records: &[ReplicateRecord]) {
    for (b, &beta) in cfg.betas.iter().enumerate() {
        let f = frequency(records.iter().map(|r| r.localization.masses[b].localized));
        agg.put(format!("localized_freq_beta_{}", level_key(beta)), Some(f));
        let masses: Vec<f64> = records.iter().map(|r| r.localization.masses[b].mass).collect();
        agg.put(format!("top_mass_beta_{}_median", level_key(beta)), median(&masses));
    }
}

/// Entry ratios of rank `l`, leaving out ambiguous pairings beyond the top.
pub(super) fn entry_ratios(records: &[ReplicateRecord], l: usize) -> Vec<f64> {
    records
        .iter()
        .filter(|r| l == 0 || !r.ambiguous_pairing)
        .filter_map(|r| r.ratios.entry.get(l).copied())
        .collect()
}

/// Poissonian regime: `lambda_l ~ |m_l|^2`, `v_l ~ e_{i_l}`.
pub fn run_poisson_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    require_rectangular(cfg, "the Poisson experiment")?;
    let regime = classify_regime(cfg.alpha(), cfg.mu())?;
    if regime != Regime::Poissonian {
        return Err(Error::RegimeMismatch(format!(
            "alpha = {} and mu = {} fall in the {regime:?} regime, not the Poissonian one",
            cfg.alpha(),
            cfg.mu()
        )));
    }
    let norm = Normalization::of(cfg)?;
    let records = cfg.map_replicates(|r, seed| covariance_replicate(cfg, &norm, r, seed, false))?;
    let spot = run_spot_check(cfg)?;

    let mut agg = Aggregates::default();
    common_aggregates(&mut agg, &records);
    agg.put("c_np", Some(norm.c));
    for l in 0..cfg.top_k {
        put_quantiles(&mut agg, &format!("ratio_entry_{}", l + 1), &entry_ratios(&records, l));
    }
    let first_points: Vec<f64> = records.iter().map(|r| r.ratios.points[0]).collect();
    let a = cfg.alpha() / 2.0;
    let ks = ks_statistic(&first_points, |t| frechet_cdf(t, a))?;
    agg.put("ks_frechet", Some(ks));
    let point_sets: Vec<Vec<f64>> = records.iter().map(|r| r.ratios.points.clone()).collect();
    for c in poisson_count_test(&point_sets, &cfg.thresholds, cfg.alpha(), IntensityKind::Covariance)? {
        let key = level_key(c.threshold);
        agg.put(format!("count_above_{key}_mean"), Some(c.mean));
        agg.put(format!("count_above_{key}_variance"), Some(c.variance));
        agg.put(format!("count_above_{key}_expected"), Some(c.expected));
        agg.put(format!("count_above_{key}_z"), Some(c.z_score));
    }
    let at_one: Vec<f64> = point_sets.iter().map(|p| counts_above(p, &[1.0])[0] as f64).collect();
    let mean_at_one = mean(&at_one).unwrap_or(0.0);
    let d1: Vec<f64> = records.iter().filter_map(|r| r.localization.distances.first().copied()).collect();
    put_quantiles(&mut agg, "loc_dist_1", &d1);
    let loc_freq = frequency(d1.iter().map(|&d| d <= LOC_DISTANCE));
    agg.put("loc_dist_1_freq_le_0.2", Some(loc_freq));
    let res: Vec<f64> = records.iter().filter_map(|r| r.ratios.residual.first().copied()).collect();
    agg.put("residual_1_median", median(&res));
    localization_frequencies(&mut agg, cfg, &records);

    let ratio_med = median(&entry_ratios(&records, 0)).unwrap_or(f64::NAN);
    let verdicts = vec![
        Verdict::range("median lambda_1 / |m_1|^2", ratio_med, 0.9, 1.1),
        Verdict::at_most("KS distance of lambda_1 / c_np^2 to Frechet(alpha/2)", ks, 0.12),
        Verdict::range("mean count of normalized top eigenvalues above 1", mean_at_one, 1.0 - 0.3, 1.0 + 0.3),
        Verdict::at_least("fraction with ||v_1 - e_i1|| <= 0.2", loc_freq, 0.8),
        spot_aggregates(&mut agg, cfg, &spot),
    ];
    Ok(ExperimentReport {
        config: ReportConfig { experiment: "poisson".into(), base: cfg.clone(), truncation: None },
        replicates: records,
        aggregates: agg.into_map(),
        verdicts,
    })
}

/// Edge regime: `lambda_l / n^mu -> (1 + sqrt rho)^2`, ESD close to
/// Marchenko–Pastur, top eigenvector delocalized.
pub fn run_edge_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    require_rectangular(cfg, "the edge experiment")?;
    let regime = classify_regime(cfg.alpha(), cfg.mu())?;
    if regime != Regime::Edge {
        return Err(Error::RegimeMismatch(format!(
            "alpha = {} and mu = {} fall in the {regime:?} regime, not the edge one",
            cfg.alpha(),
            cfg.mu()
        )));
    }
    if !cfg.ensemble.law.is_standardized() {
        return Err(Error::Hypothesis("the edge experiment needs a unit-variance law".into()));
    }
    let norm = Normalization::of(cfg)?;
    let records = cfg.map_replicates(|r, seed| covariance_replicate(cfg, &norm, r, seed, true))?;
    let spot = run_spot_check(cfg)?;

    let limit = norm.edge / norm.bulk;
    let mut agg = Aggregates::default();
    common_aggregates(&mut agg, &records);
    agg.put("edge_limit", Some(limit));
    for l in 0..cfg.top_k {
        let scaled: Vec<f64> = records.iter().filter_map(|r| r.eigs.get(l)).map(|x| x / norm.bulk).collect();
        put_quantiles(&mut agg, &format!("lambda_{}_over_n_mu", l + 1), &scaled);
    }
    let scaled1: Vec<f64> = records.iter().map(|r| r.eigs[0] / norm.bulk).collect();
    let mean1 = mean(&scaled1).unwrap_or(f64::NAN);
    let ks: Vec<f64> = records.iter().filter_map(|r| r.esd_ks).collect();
    put_quantiles(&mut agg, "ks_mp", &ks);
    localization_frequencies(&mut agg, cfg, &records);
    put_quantiles(&mut agg, "ipr_1", &records.iter().map(|r| r.localization.ipr).collect::<Vec<_>>());

    let tol = 0.15 * limit;
    let mut verdicts = vec![Verdict::range("mean lambda_1 / n^mu", mean1, limit - tol, limit + tol)];
    if let Some(m) = mean(&ks) {
        verdicts.push(Verdict::at_most("mean KS distance of the ESD to Marchenko-Pastur", m, 0.08));
    }
    if let Some(b) = cfg.betas.iter().position(|&b| (b - 0.3).abs() < 1e-12) {
        let f = frequency(records.iter().map(|r| r.localization.masses[b].localized));
        verdicts.push(Verdict::at_most("frequency of (floor(p^0.3), eta)-localized v_1", f, 0.1));
    }
    verdicts.push(spot_aggregates(&mut agg, cfg, &spot));
    Ok(ExperimentReport {
        config: ReportConfig { experiment: "edge".into(), base: cfg.clone(), truncation: None },
        replicates: records,
        aggregates: agg.into_map(),
        verdicts,
    })
}
