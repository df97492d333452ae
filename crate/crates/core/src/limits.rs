//! Closed-form limit objects: normalizations, the Fréchet law, Poisson
//! intensities, the Marchenko–Pastur law and regime classification.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quad::adaptive_simpson;
use crate::sampling::TailLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Poissonian,
    Edge,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntensityKind {
    Covariance,
    Hermitian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub alpha: f64,
    pub mu: f64,
    pub rho: f64,
    pub n: usize,
    pub p: usize,
}

impl RegimeParams {
    pub fn new(alpha: f64, mu: f64, rho: f64, n: usize) -> Result<Self> {
        check_alpha_mu(alpha, mu)?;
        check_rho(rho)?;
        let p = (rho * n as f64).round() as usize;
        if n == 0 || p == 0 {
            return Err(domain(format!("need n >= 1 and p = round(rho n) >= 1, got n = {n}, p = {p}")));
        }
        Ok(RegimeParams { alpha, mu, rho, n, p })
    }

    /// `2 (1 + 1/mu)`; undefined for `mu = 0`.
    pub fn threshold(&self) -> Option<f64> {
        regime_threshold(self.mu)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self.alpha, self.mu).expect("validated on construction")
    }
}

fn check_alpha_mu(alpha: f64, mu: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(domain(format!("mu must lie in [0, 1], got {mu}")));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(domain(format!("rho must lie in (0, 1], got {rho}")));
    }
    Ok(())
}

/// Smallest `t` with `tail(t) <= target`.
fn tail_infimum(law: &TailLaw, target: f64) -> Result<f64> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(domain(format!("normalization target {target} outside (0, 1]")));
    }
    law.quantile_abs(target)
}

/// Scale of the largest entries of a `p x n` matrix with density `n^(mu-1)`.
pub fn c_np(law: &TailLaw, n: usize, p: usize, mu: f64) -> Result<f64> {
    let count = p as f64 * (n as f64).powf(mu);
    if !(count >= 1.0) {
        return Err(domain(format!("p n^mu = {count} is below 1")));
    }
    tail_infimum(law, 1.0 / count)
}

/// Scale of the largest entries of the `n x n` symmetric ensemble.
pub fn c_n(law: &TailLaw, n: usize, mu: f64) -> Result<f64> {
    let count = (n as f64 + 1.0) * (n as f64).powf(mu) / 2.0;
    if !(count >= 1.0) {
        return Err(domain(format!("(n + 1) n^mu / 2 = {count} is below 1")));
    }
    tail_infimum(law, 1.0 / count)
}

/// `exp(-t^-a)`, zero for `t <= 0`.
pub fn frechet_cdf(t: f64, a: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-t.powf(-a)).exp()
    }
}

/// Expected number of limiting points above `x`.
pub fn pp_mean_count(x: f64, alpha: f64, kind: IntensityKind) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("threshold must be positive, got {x}")));
    }
    Ok(match kind {
        IntensityKind::Covariance => x.powf(-alpha / 2.0),
        IntensityKind::Hermitian => x.powf(-alpha),
    })
}

/// `((1 - sqrt rho)^2, (1 + sqrt rho)^2)`.
pub fn mp_edges(rho: f64) -> Result<(f64, f64)> {
    check_rho(rho)?;
    let s = rho.sqrt();
    Ok(((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)))
}

pub fn mp_density(x: f64, rho: f64) -> Result<f64> {
    let (lo, hi) = mp_edges(rho)?;
    if !(x > lo && x < hi) {
        return Ok(0.0);
    }
    Ok(((hi - x) * (x - lo)).sqrt() / (2.0 * PI * rho * x))
}

/// Marchenko–Pastur CDF by quadrature. With `x = lo + w sin^2(phi)` the
/// integrand becomes `(w sin^2 / x) (w cos^2) / (pi rho)`, bounded even when
/// the lower edge is 0.
pub fn mp_cdf(x: f64, rho: f64) -> Result<f64> {
    let (lo, hi) = mp_edges(rho)?;
    if x <= lo {
        return Ok(0.0);
    }
    if x >= hi {
        return Ok(1.0);
    }
    let w = hi - lo;
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let xs = lo + w * s * s;
        let ratio = if xs > 0.0 { w * s * s / xs } else { 1.0 };
        ratio * w * c * c / (PI * rho)
    };
    let phi = ((x - lo) / w).sqrt().asin();
    Ok(adaptive_simpson(&f, 0.0, phi, 1e-12).clamp(0.0, 1.0))
}

pub fn regime_threshold(mu: f64) -> Option<f64> {
    (mu > 0.0).then(|| 2.0 * (1.0 + 1.0 / mu))
}

pub fn classify_regime(alpha: f64, mu: f64) -> Result<Regime> {
    check_alpha_mu(alpha, mu)?;
    Ok(match regime_threshold(mu) {
        None => Regime::Poissonian,
        Some(t) if alpha < t => Regime::Poissonian,
        Some(t) if alpha > t => Regime::Edge,
        Some(_) => Regime::Critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SlowlyVarying;

    #[test]
    fn c_np_closed_form() {
        let law = TailLaw::pareto(2.0).unwrap();
        assert!((c_np(&law, 100, 100, 1.0).unwrap() - 100.0).abs() <= 1e-9);
        // mu = 0, p = n: inf { t : G <= 1/p }.
        assert!((c_np(&law, 400, 400, 0.0).unwrap() - 20.0).abs() <= 1e-9);
        assert!(c_np(&law, 1, 0, 1.0).is_err());
    }

    #[test]
    fn c_np_bracketing_log_power() {
        let law = TailLaw::new(3.0, SlowlyVarying::LogPower { c: 1.0, beta: 1.5 }, 1.0, false).unwrap();
        for (n, p) in [(100, 50), (1000, 1000), (5000, 2500)] {
            let target = 1.0 / (p as f64 * n as f64);
            let c = c_np(&law, n, p, 1.0).unwrap();
            assert!(law.tail(c).unwrap() <= target);
            assert!(law.tail(c - 1e-9).unwrap() > target);
            assert!(law.tail(c * (1.0 - 1e-9)).unwrap() > target);
        }
    }

    #[test]
    fn c_np_monotone() {
        let law = TailLaw::standardized_pareto(5.0).unwrap();
        let mut prev = 0.0;
        for n in [10, 20, 40, 80, 160] {
            let c = c_np(&law, n, n / 2, 0.7).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn c_n_examples() {
        let law = TailLaw::pareto(2.0).unwrap();
        let expect = (100.0f64 * 99.0 / 2.0).sqrt();
        assert!((c_n(&law, 99, 1.0).unwrap() - expect).abs() <= 1e-9 * expect);
        assert!((expect - 70.356).abs() < 1e-3);
        assert_eq!(c_n(&law, 1, 1.0).unwrap(), law.support_min());
        let law = TailLaw::pareto(1.5).unwrap();
        let r = c_n(&law, 20000, 1.0).unwrap() / c_n(&law, 10000, 1.0).unwrap();
        assert!((r / 2f64.powf(2.0 / 1.5) - 1.0).abs() < 0.01);
    }

    #[test]
    fn frechet_values() {
        assert!((frechet_cdf(1.0, 3.3) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((frechet_cdf(2.0, 2.0) - (-0.25f64).exp()).abs() < 1e-15);
        assert_eq!(frechet_cdf(0.0, 1.0), 0.0);
        assert!(frechet_cdf(1e12, 0.5) > 1.0 - 1e-5);
        let mut prev = 0.0;
        for k in 1..200 {
            let v = frechet_cdf(k as f64 * 0.05, 0.5);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn point_process_counts() {
        assert_eq!(pp_mean_count(2.0, 4.0, IntensityKind::Covariance).unwrap(), 0.25);
        assert_eq!(pp_mean_count(4.0, 1.0, IntensityKind::Hermitian).unwrap(), 0.25);
        for a in [0.5, 1.0, 3.0] {
            assert_eq!(pp_mean_count(1.0, a, IntensityKind::Covariance).unwrap(), 1.0);
        }
        // Scaling: pp(s x) = s^(-alpha/2) pp(x).
        let (x, s, a) = (0.7, 3.0, 1.3);
        let lhs = pp_mean_count(s * x, a, IntensityKind::Covariance).unwrap();
        let rhs = s.powf(-a / 2.0) * pp_mean_count(x, a, IntensityKind::Covariance).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
        assert!(pp_mean_count(0.0, 1.0, IntensityKind::Hermitian).is_err());
    }

    #[test]
    fn point_process_count_matches_intensity_integral() {
        // Intensity (alpha/2) t^(-1 - alpha/2) integrated over (x, inf) via t = x / u.
        let (x, a) = (1.7, 1.2);
        let f = |u: f64| if u <= 0.0 { 0.0 } else { (a / 2.0) * (x / u).powf(-1.0 - a / 2.0) * x / (u * u) };
        let num = adaptive_simpson(&f, 0.0, 1.0, 1e-12);
        assert!((num - pp_mean_count(x, a, IntensityKind::Covariance).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn mp_edge_values() {
        assert_eq!(mp_edges(1.0).unwrap(), (0.0, 4.0));
        assert_eq!(mp_edges(0.25).unwrap(), (0.25, 2.25));
        let (lo, hi) = mp_edges(1e-12).unwrap();
        assert!((lo - 1.0).abs() < 1e-5 && (hi - 1.0).abs() < 1e-5);
        assert!(mp_edges(0.0).is_err() && mp_edges(1.5).is_err());
    }

    #[test]
    fn mp_density_value() {
        assert!((mp_density(2.0, 1.0).unwrap() - 1.0 / (2.0 * PI)).abs() <= 1e-12);
        assert_eq!(mp_density(5.0, 1.0).unwrap(), 0.0);
        assert_eq!(mp_density(0.1, 0.25).unwrap(), 0.0);
    }

    #[test]
    fn mp_cdf_normalization() {
        for rho in [0.1, 0.25, 0.5, 1.0] {
            let (lo, hi) = mp_edges(rho).unwrap();
            assert_eq!(mp_cdf(lo, rho).unwrap(), 0.0);
            let top = mp_cdf(hi * (1.0 - 1e-15), rho).unwrap();
            assert!((top - 1.0).abs() <= 1e-8, "rho = {rho}: {top}");
            assert_eq!(mp_cdf(hi, rho).unwrap(), 1.0);
        }
    }

    #[test]
    fn mp_cdf_matches_closed_form_at_rho_one() {
        // x = 4 sin^2(phi) gives F = (2/pi)(phi + sin phi cos phi).
        for x in [0.01, 0.5, 1.0, 2.0, 3.3, 3.99] {
            let phi = (x / 4.0f64).sqrt().asin();
            let expect = 2.0 / PI * (phi + phi.sin() * phi.cos());
            assert!((mp_cdf(x, 1.0).unwrap() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn mp_cdf_matches_density_quadrature() {
        // Plain Simpson on the density in x, away from the edges.
        let rho = 0.5;
        let f = |x: f64| mp_density(x, rho).unwrap();
        let (lo, _) = mp_edges(rho).unwrap();
        let a = mp_cdf(1.0, rho).unwrap();
        let b = mp_cdf(2.0, rho).unwrap();
        let direct = adaptive_simpson(&f, 1.0, 2.0, 1e-12);
        assert!((b - a - direct).abs() < 1e-9);
        assert!(mp_cdf(lo + 1e-3, rho).unwrap() > 0.0);
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(1.0, 1.0).unwrap(), Regime::Poissonian);
        assert_eq!(classify_regime(8.0, 1.0).unwrap(), Regime::Edge);
        assert_eq!(classify_regime(4.0, 1.0).unwrap(), Regime::Critical);
        assert_eq!(classify_regime(100.0, 0.0).unwrap(), Regime::Poissonian);
        assert!(classify_regime(1.0, 1.5).is_err());
        let p = RegimeParams::new(8.0, 0.5, 0.5, 101).unwrap();
        assert_eq!(p.p, 51);
        assert_eq!(p.threshold(), Some(6.0));
        assert_eq!(p.regime(), Regime::Edge);
    }
}
