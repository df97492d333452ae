//! Eigenvector localization metrics.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationProfile {
    /// `mass_curve[L-1]` is the largest squared mass carried by `L` coordinates.
    pub mass_curve: Vec<f64>,
    /// Coordinates attaining each entry of the mass curve (a prefix of one ordering).
    #[serde(skip)]
    pub best_support: Vec<Vec<usize>>,
    /// Inverse participation ratio `sum v_j^4`. Not used by any criterion.
    pub ipr: f64,
}

/// Coordinates sorted by decreasing magnitude, ties by index.
fn magnitude_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx
}

fn check_unit(v: &[f64]) -> Result<()> {
    let n2: f64 = v.iter().map(|x| x * x).sum();
    if (n2.sqrt() - 1.0).abs() > 1e-10 {
        return Err(domain(format!("expected a unit vector, norm is {}", n2.sqrt())));
    }
    Ok(())
}

/// Mass curve up to `l_max` coordinates (clamped to the dimension).
pub fn profile(v: &[f64], l_max: usize) -> Result<LocalizationProfile> {
    check_unit(v)?;
    let order = magnitude_order(v);
    let l_max = l_max.min(v.len());
    let mut mass_curve = Vec::with_capacity(l_max);
    let mut best_support = Vec::with_capacity(l_max);
    let mut acc = 0.0;
    for l in 0..l_max {
        acc += v[order[l]] * v[order[l]];
        mass_curve.push(acc);
        best_support.push(order[..=l].to_vec());
    }
    let ipr = v.iter().map(|x| x.powi(4)).sum();
    Ok(LocalizationProfile { mass_curve, best_support, ipr })
}

impl LocalizationProfile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Largest squared mass on `l` coordinates.
pub fn top_mass(v: &[f64], l: usize) -> Result<f64> {
    if l > v.len() {
        return Err(domain(format!("support size {l} exceeds dimension {}", v.len())));
    }
    let mut sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    if l < sq.len() && l > 0 {
        sq.select_nth_unstable_by(l - 1, |a, b| b.total_cmp(a));
    }
    Ok(sq[..l].iter().sum())
}

/// `(L, eta)`-localization: some `L` coordinates carry mass strictly above `1 - eta`.
pub fn is_localized(v: &[f64], l: usize, eta: f64) -> Result<bool> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(domain(format!("eta must lie in (0, 1], got {eta}")));
    }
    if l == 0 {
        return Err(domain("support size must be positive"));
    }
    check_unit(v)?;
    Ok(top_mass(v, l)? > 1.0 - eta)
}

fn signed_distance(v: &[f64], target: &[(usize, f64)]) -> f64 {
    // ||v - s t||^2 = |v|^2 + |t|^2 - 2 s <v, t>, minimized by s = sign <v, t>.
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let tt: f64 = target.iter().map(|(_, t)| t * t).sum();
    let vt: f64 = target.iter().map(|&(i, t)| v[i] * t).sum();
    (vv + tt - 2.0 * vt.abs()).max(0.0).sqrt()
}

/// `min_s ||v - s e_i||` over `s = +-1`.
pub fn distance_to_basis_vector(v: &[f64], i: usize) -> Result<f64> {
    if i >= v.len() {
        return Err(domain(format!("index {i} out of range for dimension {}", v.len())));
    }
    Ok(signed_distance(v, &[(i, 1.0)]))
}

/// Distance to the pair vector of a real symmetric coupling: `(e_i + e_j)/sqrt 2`
/// for `theta = 0` (positive entry), `(e_i - e_j)/sqrt 2` for `theta = pi`.
/// Minimized over a global sign.
pub fn distance_to_pair_vector(v: &[f64], i: usize, j: usize, theta: f64) -> Result<f64> {
    if i == j {
        return Err(domain("pair vector needs two distinct indices"));
    }
    if i >= v.len() || j >= v.len() {
        return Err(domain(format!("pair ({i}, {j}) out of range for dimension {}", v.len())));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if theta.cos() >= 0.0 { 1.0 } else { -1.0 };
    Ok(signed_distance(v, &[(i, h), (j, sign * h)]))
}

/// The smaller distance to either pair vector on `{i, j}`.
pub fn distance_to_either_pair_vector(v: &[f64], i: usize, j: usize) -> Result<f64> {
    Ok(distance_to_pair_vector(v, i, j, 0.0)?.min(distance_to_pair_vector(v, i, j, std::f64::consts::PI)?))
}

pub fn inverse_participation_ratio(v: &[f64]) -> f64 {
    v.iter().map(|x| x.powi(4)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= s);
        v
    }

    #[test]
    fn basis_vector_is_localized() {
        let mut v = vec![0.0; 5];
        v[0] = 1.0;
        for eta in [1e-9, 0.3, 1.0] {
            assert!(is_localized(&v, 1, eta).unwrap());
        }
    }

    #[test]
    fn uniform_vector_not_localized() {
        let v = vec![0.1; 100];
        assert!((top_mass(&v, 10).unwrap() - 0.1).abs() < 1e-12);
        assert!(!is_localized(&v, 10, 0.5).unwrap());
    }

    #[test]
    fn support_larger_than_dimension_is_error() {
        assert!(is_localized(&[1.0, 0.0], 3, 0.5).is_err());
    }

    #[test]
    fn greedy_mass_matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..40 {
            let dim = 2 + trial % 11;
            let v = unit(dim, &mut rng);
            let p = profile(&v, dim).unwrap();
            for l in 1..=dim {
                let mut best: f64 = 0.0;
                for mask in 0u32..(1 << dim) {
                    if mask.count_ones() as usize == l {
                        let m: f64 = (0..dim).filter(|b| mask >> b & 1 == 1).map(|b| v[b] * v[b]).sum();
                        best = best.max(m);
                    }
                }
                assert!((p.mass_curve[l - 1] - best).abs() < 1e-12);
                assert!((top_mass(&v, l).unwrap() - best).abs() < 1e-12);
            }
            assert!((p.mass_curve[dim - 1] - 1.0).abs() < 1e-12);
            assert!(p.mass_curve.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn basis_distance_examples() {
        let mut v = vec![0.0; 4];
        v[3] = 1.0;
        assert_eq!(distance_to_basis_vector(&v, 3).unwrap(), 0.0);
        v[3] = -1.0;
        assert_eq!(distance_to_basis_vector(&v, 3).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = distance_to_basis_vector(&[h, h], 0).unwrap();
        assert!((d - (2.0 - 2.0f64.sqrt()).sqrt()).abs() < 1e-15);
        assert!((d - 0.7654).abs() < 1e-4);
    }

    #[test]
    fn pair_distance_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(distance_to_pair_vector(&[h, h], 0, 1, 0.0).unwrap() < 1e-15);
        assert!(distance_to_pair_vector(&[h, -h], 0, 1, std::f64::consts::PI).unwrap() < 1e-15);
        assert!(distance_to_pair_vector(&[-h, h], 0, 1, std::f64::consts::PI).unwrap() < 1e-15);
        assert!((distance_to_pair_vector(&[h, -h], 0, 1, 0.0).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
        assert!(distance_to_either_pair_vector(&[h, -h], 0, 1).unwrap() < 1e-15);
        assert!(distance_to_pair_vector(&[1.0], 0, 0, 0.0).is_err());
    }

    #[test]
    fn pair_distance_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for _ in 0..50 {
            let mut v = vec![0.0; 8];
            v[2] = h;
            v[5] = h;
            for x in v.iter_mut() {
                *x += 0.05 * (rng.random::<f64>() - 0.5);
            }
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= s);
            let direct = |sgn: f64| {
                let mut t = vec![0.0; 8];
                t[2] = sgn * h;
                t[5] = sgn * h;
                v.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            };
            let expect = direct(1.0).min(direct(-1.0));
            assert!((distance_to_pair_vector(&v, 2, 5, 0.0).unwrap() - expect).abs() < 1e-12);
            let flipped: Vec<f64> = v.iter().map(|x| -x).collect();
            assert!((distance_to_pair_vector(&flipped, 2, 5, 0.0).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_json_keys() {
        let p = profile(&[1.0, 0.0], 2).unwrap();
        assert_eq!(p.to_json().unwrap(), r#"{"mass_curve":[1.0,1.0],"ipr":1.0}"#);
    }
}
