//! Mean and variance of the spectrum, in exact rational arithmetic.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::chain::{dispersion, ChainSpec, Epsilon};
use crate::density::DensityTable;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumStats {
    pub mu: BigRational,
    pub sigma2: BigRational,
    pub sigma: f64,
}

impl SpectrumStats {
    pub fn new(mu: BigRational, sigma2: BigRational) -> Self {
        let sigma = sigma2.to_f64().unwrap_or(f64::NAN).sqrt();
        SpectrumStats { mu, sigma2, sigma }
    }

    pub fn mu_f64(&self) -> f64 {
        self.mu.to_f64().unwrap_or(f64::NAN)
    }

    /// Same spectrum, exact fields as `p/q` strings.
    pub fn summary(&self) -> MomentsSummary {
        MomentsSummary {
            mu: format_rational(&self.mu),
            sigma2: format_rational(&self.sigma2),
            mu_decimal: self.mu_f64(),
            sigma2_decimal: self.sigma2.to_f64().unwrap_or(f64::NAN),
            sigma: self.sigma,
        }
    }
}

impl fmt::Display for SpectrumStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mu = {}, sigma^2 = {}", format_rational(&self.mu), format_rational(&self.sigma2))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentsSummary {
    pub mu: String,
    pub sigma2: String,
    pub mu_decimal: f64,
    pub sigma2_decimal: f64,
    pub sigma: f64,
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Closed-form `μ` and `σ²` from the dispersion relation alone.
pub fn closed_form_moments(spec: &ChainSpec) -> SpectrumStats {
    let f = dispersion(spec).values();
    let m = spec.m() as i64;
    let sum: BigRational = f.iter().sum();
    let half = ratio(1, 2);
    let mu = match spec.epsilon() {
        Epsilon::Ferro => &half * (BigRational::one() - ratio(1, m)) * &sum,
        Epsilon::Antiferro => &half * (BigRational::one() + ratio(1, m)) * &sum,
    };
    let squares: BigRational = f.iter().map(|x| x * x).sum();
    let neighbours: BigRational = f.windows(2).map(|w| &w[0] * &w[1]).sum();
    let sigma2 = (BigRational::one() - ratio(1, m * m)) * (ratio(1, 4) * squares - ratio(1, 6) * neighbours);
    SpectrumStats::new(mu, sigma2)
}

/// Exact moments of a density table.
pub fn empirical_moments(density: &DensityTable) -> Result<SpectrumStats> {
    if density.is_empty() {
        return Err(Error::EmptyDensity);
    }
    let mut first = BigInt::zero();
    let mut second = BigInt::zero();
    for (e, c) in density.entries() {
        let e = BigInt::from(*e);
        let w = BigInt::from(c.clone()) * &e;
        second += &w * &e;
        first += w;
    }
    let scale = BigInt::from(density.energy_scale());
    let total = BigInt::from(density.total().clone());
    let mu = BigRational::new(first, &total * &scale);
    let second = BigRational::new(second, &total * &scale * &scale);
    let sigma2 = second - &mu * &mu;
    Ok(SpectrumStats::new(mu, sigma2))
}

/// `|(1/12)(m²−1) Σ_j γ_j² − 1|`, evaluated exactly (`γ_j² = F(j)²/(m²σ²)` is
/// rational) and rounded once at the end.
pub fn gamma_sum_check_exact(spec: &ChainSpec) -> BigRational {
    let stats = closed_form_moments(spec);
    let m = spec.m() as i64;
    let squares: BigRational = dispersion(spec).values().iter().map(|x| x * x).sum();
    let lhs = ratio(m * m - 1, 12) * squares / (ratio(m * m, 1) * &stats.sigma2);
    (lhs - BigRational::one()).abs()
}

pub fn gamma_sum_check(spec: &ChainSpec) -> f64 {
    gamma_sum_check_exact(spec).to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Alpha;
    use crate::motif::{brute_force_density, DeltaRule};

    #[test]
    fn closed_form_examples() {
        let pf = ChainSpec::pf(3, 2, Epsilon::Ferro).unwrap();
        let s = closed_form_moments(&pf);
        assert_eq!((s.mu.clone(), s.sigma2.clone()), (ratio(3, 4), ratio(11, 16)));
        assert!((s.sigma - 11f64.sqrt() / 4.0).abs() < 1e-15);

        let hs = closed_form_moments(&ChainSpec::hs(4, 2, Epsilon::Ferro).unwrap());
        assert_eq!((hs.mu, hs.sigma2), (ratio(5, 2), ratio(27, 8)));

        let af = closed_form_moments(&pf.with_epsilon(Epsilon::Antiferro));
        assert_eq!((af.mu, af.sigma2), (ratio(9, 4), ratio(11, 16)));
    }

    #[test]
    fn empirical_examples() {
        let d = DensityTable::from_counts(1, [(0, 4u32.into()), (1, 2u32.into()), (2, 2u32.into())], 8u32.into())
            .unwrap();
        let s = empirical_moments(&d).unwrap();
        assert_eq!((s.mu, s.sigma2), (ratio(3, 4), ratio(11, 16)));

        let atom = DensityTable::from_counts(1, [(0, 1u32.into())], 1u32.into()).unwrap();
        let s = empirical_moments(&atom).unwrap();
        assert_eq!((s.mu, s.sigma2), (BigRational::zero(), BigRational::zero()));

        let hs = DensityTable::from_counts(
            1,
            [(0, 5u32.into()), (3, 6u32.into()), (4, 4u32.into()), (6, 1u32.into())],
            16u32.into(),
        )
        .unwrap();
        let s = empirical_moments(&hs).unwrap();
        assert_eq!((s.mu, s.sigma2), (ratio(5, 2), ratio(27, 8)));

        let empty = DensityTable::from_counts(1, [], 0u32.into()).unwrap();
        assert!(matches!(empirical_moments(&empty), Err(Error::EmptyDensity)));
    }

    #[test]
    fn gamma_sum_small_case() {
        // Oracle: σ² from brute force, then γ_j² = F(j)²/(4σ²) by substitution.
        let pf = ChainSpec::pf(3, 2, Epsilon::Ferro).unwrap();
        let d = brute_force_density(&pf, DeltaRule::Ferro, 100).unwrap();
        let sigma2 = empirical_moments(&d).unwrap().sigma2;
        let g1 = ratio(1, 1) / (ratio(4, 1) * &sigma2);
        let g2 = ratio(4, 1) / (ratio(4, 1) * &sigma2);
        let expected = (ratio(3, 12) * (g1 + g2) - BigRational::one()).abs();
        assert_eq!(expected, ratio(6, 11));
        assert_eq!(gamma_sum_check_exact(&pf), expected);
    }

    #[test]
    fn epsilon_symmetries() {
        for spec in [
            ChainSpec::hs(9, 3, Epsilon::Ferro).unwrap(),
            ChainSpec::fi(7, 4, Epsilon::Ferro, Alpha::new(5, 3).unwrap()).unwrap(),
        ] {
            let f = closed_form_moments(&spec);
            let af = closed_form_moments(&spec.with_epsilon(Epsilon::Antiferro));
            assert_eq!(f.sigma2, af.sigma2);
            assert_eq!(f.mu + af.mu, dispersion(&spec).sum());
        }
    }

    #[test]
    fn closed_form_matches_brute_force() {
        for n in 2..=7 {
            for m in 2..=3 {
                for eps in Epsilon::BOTH {
                    let spec = ChainSpec::fi(n, m, eps, Alpha::new(3, 2).unwrap()).unwrap();
                    let d = brute_force_density(&spec, eps.into(), 1 << 20).unwrap();
                    assert_eq!(closed_form_moments(&spec), empirical_moments(&d).unwrap(), "{spec}");
                }
            }
        }
    }
}
