//! Randomized suite of exact invariants on small instances.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{dot, DenseMatrix};
use crate::error::Result;
use crate::localization::top_mass;
use crate::matrix::SparseMatrix;
use crate::sampling::{sample_matrix, EnsembleSpec, Shape, SparsityKind, SparsitySpec, TailLaw};
use crate::seed::{stream, stream_seed, Purpose};
use crate::spectral::{
    check_interlacing, eig_dense_symmetric, localization_bound_check, norm_bounds, perturbation_check, InterlacingMode,
    PartB,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random rectangular instances.
    pub instances: usize,
    /// Largest `p` and `n`.
    pub max_dim: usize,
    /// Instances for the localized-eigenvalue bound.
    pub bound_instances: usize,
    pub bound_max_dim: usize,
    pub bound_max_support: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 0, instances: 500, max_dim: 40, bound_instances: 100, bound_max_dim: 12, bound_max_support: 3 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub passed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: BTreeMap<String, Tally>,
    pub max_interlacing_violation: f64,
}

impl VerifyReport {
    fn record(&mut self, name: &str, ok: bool) {
        let t = self.checks.entry(name.to_string()).or_default();
        t.total += 1;
        t.passed += ok as usize;
    }

    pub fn all_passed(&self) -> bool {
        self.checks.values().all(|t| t.passed == t.total)
    }

    pub fn failures(&self) -> Vec<(&str, Tally)> {
        self.checks.iter().filter(|(_, t)| t.passed != t.total).map(|(k, t)| (k.as_str(), *t)).collect()
    }
}

fn random_law(rng: &mut ChaCha8Rng) -> Result<TailLaw> {
    let alpha = rng.random_range(0.5..8.0);
    if alpha > 2.0 && rng.random::<bool>() {
        TailLaw::standardized_pareto(alpha)
    } else {
        TailLaw::pareto(alpha)
    }
}

fn random_sparsity(rng: &mut ChaCha8Rng) -> SparsitySpec {
    let mu = rng.random_range(0.0..=1.0);
    let kind = match rng.random_range(0..6) {
        0 => SparsityKind::Band { halfwidth: rng.random_range(1..6) },
        1 => SparsityKind::FixedCountPerRow { count: rng.random_range(1..8) },
        _ => SparsityKind::Bernoulli,
    };
    SparsitySpec { kind, mu }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        let s = dot(&v, &v).sqrt();
        if s > 1e-3 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

fn rectangular_instance(cfg: &VerifyConfig, t: usize, rng: &mut ChaCha8Rng) -> Result<SparseMatrix> {
    let n = rng.random_range(1..=cfg.max_dim);
    let p = rng.random_range(1..=n);
    let spec = EnsembleSpec {
        shape: Shape::Rectangular { n, rho: p as f64 / n as f64 },
        law: random_law(rng)?,
        sparsity: random_sparsity(rng),
        seed: stream_seed(cfg.seed, Purpose::Instance, t as u64),
    };
    sample_matrix(&spec)
}

fn hermitian_instance(seed: u64, n: usize, rng: &mut ChaCha8Rng) -> Result<SparseMatrix> {
    let spec = EnsembleSpec { shape: Shape::Hermitian { n }, law: random_law(rng)?, sparsity: random_sparsity(rng), seed };
    sample_matrix(&spec)
}

/// Rayleigh and norm bounds, the three interlacing statements, eigenvalue
/// perturbation and the localized-eigenvalue bound.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut rep = VerifyReport::default();
    let note_interlacing = |rep: &mut VerifyReport, name: &str, r: crate::spectral::InterlacingReport| {
        rep.max_interlacing_violation = rep.max_interlacing_violation.max(r.max_violation);
        rep.record(name, r.holds);
    };
    for t in 0..cfg.instances {
        let mut rng = stream(cfg.seed, Purpose::Instance, t as u64);
        let m = rectangular_instance(cfg, t, &mut rng)?;
        let gram = m.gram_dense();
        let full = eig_dense_symmetric(&gram)?;
        let lambda1 = full.eigenvalues[0];
        let b = norm_bounds(&m, lambda1)?;
        rep.record("rayleigh lower bound", b.rayleigh_holds);
        rep.record("norm upper bound", b.norm_holds);
        rep.record("positive semidefinite", full.eigenvalues.iter().all(|&l| l >= -1e-10 * lambda1.max(f64::MIN_POSITIVE)));

        let row = rng.random_range(0..m.rows());
        note_interlacing(&mut rep, "interlacing row deletion", check_interlacing(&m, InterlacingMode::RowDeletion, row)?);
        let col = rng.random_range(0..m.cols());
        note_interlacing(&mut rep, "interlacing column deletion", check_interlacing(&m, InterlacingMode::ColDeletion, col)?);
        let hn = rng.random_range(1..=cfg.max_dim);
        let h = hermitian_instance(stream_seed(cfg.seed, Purpose::Spot, t as u64), hn, &mut rng)?;
        let idx = rng.random_range(0..hn);
        note_interlacing(&mut rep, "interlacing principal minor", check_interlacing(&h, InterlacingMode::HermitianMinor, idx)?);

        let mut trials = vec![random_unit(m.rows(), &mut rng)];
        if let Some(e) = m.top_entries(1).entries.first() {
            let mut v = vec![0.0; m.rows()];
            v[e.i] = 1.0;
            trials.push(v);
        }
        for v in trials {
            let c = perturbation_check(&gram, &v, &full)?;
            rep.record("perturbation nearest eigenvalue", c.part_a_holds);
            if let PartB::Evaluated { holds, .. } = c.part_b {
                rep.record("perturbation eigenvector", holds);
            }
        }
    }

    for t in 0..cfg.bound_instances {
        let mut rng = stream(cfg.seed, Purpose::Instance, (cfg.instances + t) as u64);
        let dim = rng.random_range(2..=cfg.bound_max_dim);
        let seed = stream_seed(cfg.seed, Purpose::Instance, (cfg.instances + t) as u64);
        let a: DenseMatrix = if t % 2 == 0 {
            hermitian_instance(seed, dim, &mut rng)?.to_dense_matrix()
        } else {
            let n = rng.random_range(dim..=cfg.max_dim.max(dim));
            let spec = EnsembleSpec {
                shape: Shape::Rectangular { n, rho: dim as f64 / n as f64 },
                law: random_law(&mut rng)?,
                sparsity: SparsitySpec::bernoulli(rng.random_range(0.3..=1.0)),
                seed,
            };
            sample_matrix(&spec)?.gram_dense()
        };
        let full = eig_dense_symmetric(&a)?;
        for (lambda, v) in full.eigenvalues.iter().zip(&full.eigenvectors) {
            for l in 1..=cfg.bound_max_support.min(dim) {
                // Smallest eta (plus a margin) for which v is (l, eta)-localized.
                let eta = 1.0 - top_mass(v, l)? + 0.01;
                if eta >= 1.0 {
                    continue;
                }
                let c = localization_bound_check(&a, *lambda, v, l, eta)?;
                if c.preconditions {
                    rep.record("localized eigenvalue bound", c.holds);
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = VerifyConfig::default();
        let rep = run_verify(&cfg).unwrap();
        assert!(rep.all_passed(), "{:?}", rep.failures());
        for name in [
            "rayleigh lower bound",
            "norm upper bound",
            "interlacing row deletion",
            "interlacing column deletion",
            "interlacing principal minor",
            "perturbation nearest eigenvalue",
            "localized eigenvalue bound",
        ] {
            assert!(rep.checks[name].total > 0, "{name}");
        }
    }
}
