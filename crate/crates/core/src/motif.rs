//! Motifs and the motif energy formula `E(n) = Σ_i δ(n_i, n_{i+1}) F(i)`,
//! plus exhaustive enumeration of all `m^N` spin configurations.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use rayon::prelude::*;

use crate::chain::{dispersion, ChainSpec, DispersionTable, Epsilon};
use crate::density::DensityTable;
use crate::error::{Error, Result};

/// Default cap on `m^N` for [`brute_force_density`].
pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000_000;

/// Which bonds of a configuration are "excited".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DeltaRule {
    /// 1 iff `j < k`.
    Ferro,
    /// 1 iff `j ≥ k`.
    Antiferro,
    /// su(n|n′): 1 iff `j > k` or `j = k > n`.
    Susy { bosonic: usize, fermionic: usize },
}

impl From<Epsilon> for DeltaRule {
    fn from(e: Epsilon) -> Self {
        match e {
            Epsilon::Ferro => DeltaRule::Ferro,
            Epsilon::Antiferro => DeltaRule::Antiferro,
        }
    }
}

impl DeltaRule {
    /// Checks the rule is usable with internal dimension `m`.
    pub fn validate(self, m: usize) -> Result<()> {
        match self {
            DeltaRule::Susy { bosonic, fermionic } if bosonic + fermionic != m => Err(Error::InvalidSpec(
                format!("susy rule su({bosonic}|{fermionic}) needs m = {}, got {m}", bosonic + fermionic),
            )),
            _ => Ok(()),
        }
    }

    /// `δ(j, k)` for 1-based spin values, without range checks.
    #[inline]
    pub(crate) fn excited(self, j: usize, k: usize) -> bool {
        match self {
            DeltaRule::Ferro => j < k,
            DeltaRule::Antiferro => j >= k,
            DeltaRule::Susy { bosonic, .. } => j > k || (j == k && j > bosonic),
        }
    }
}

pub fn delta(rule: DeltaRule, m: usize, j: usize, k: usize) -> Result<u8> {
    rule.validate(m)?;
    for v in [j, k] {
        if v == 0 || v > m {
            return Err(Error::SpinOutOfRange { value: v, m });
        }
    }
    Ok(rule.excited(j, k) as u8)
}

/// A basis state `(n_1, …, n_N)` with `1 ≤ n_i ≤ m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<usize>,
    m: usize,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<usize>, m: usize) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::InvalidSpec("spin configuration must not be empty".into()));
        }
        if let Some(&v) = spins.iter().find(|&&v| v == 0 || v > m) {
            return Err(Error::SpinOutOfRange { value: v, m });
        }
        Ok(SpinConfiguration { spins, m })
    }

    pub fn spins(&self) -> &[usize] {
        &self.spins
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MotifVector(Vec<bool>);

impl MotifVector {
    pub fn new(bits: Vec<bool>) -> Self {
        MotifVector(bits)
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        MotifVector(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Exchanges 0 and 1, mapping a ferro motif to its antiferro partner.
    pub fn complement(&self) -> Self {
        MotifVector(self.0.iter().map(|b| !b).collect())
    }
}

pub fn motif_of(rule: DeltaRule, config: &SpinConfiguration) -> Result<MotifVector> {
    rule.validate(config.m)?;
    Ok(MotifVector(config.spins.windows(2).map(|w| rule.excited(w[0], w[1])).collect()))
}

/// Energy on the dispersion grid, `D·E`.
pub fn motif_energy_scaled(motif: &MotifVector, disp: &DispersionTable) -> Result<u64> {
    if motif.len() != disp.len() {
        return Err(Error::LengthMismatch { expected: disp.len(), got: motif.len() });
    }
    Ok(motif.0.iter().zip(disp.scaled()).filter(|(b, _)| **b).map(|(_, f)| f).sum())
}

pub fn motif_energy(motif: &MotifVector, disp: &DispersionTable) -> Result<BigRational> {
    let e = motif_energy_scaled(motif, disp)?;
    Ok(BigRational::new(BigInt::from(e), BigInt::from(disp.energy_scale())))
}

/// Exact level density by enumerating all `m^N` configurations.
pub fn brute_force_density(spec: &ChainSpec, rule: DeltaRule, cap: u64) -> Result<DensityTable> {
    brute_force_density_with(&dispersion(spec), spec.m(), rule, cap)
}

/// Enumeration over an arbitrary dispersion table and any `m ≥ 1`.
pub fn brute_force_density_with(
    disp: &DispersionTable,
    m: usize,
    rule: DeltaRule,
    cap: u64,
) -> Result<DensityTable> {
    rule.validate(m)?;
    if m == 0 {
        return Err(Error::InvalidSpec("m must be positive".into()));
    }
    let n = disp.len() + 1;
    let states = (m as u64).checked_pow(n as u32).filter(|&s| s <= cap).ok_or_else(|| {
        Error::size_limit(
            "brute-force enumeration",
            BigUint::from(m).pow(n as u32),
            cap,
            " (use the transfer-matrix DP backend instead)",
        )
    })?;
    debug_assert!(states >= 1);

    let width = disp.scaled_sum() as usize + 1;
    let f = disp.scaled();

    // Parallel over the value of the first spin; each worker fills its own
    // histogram and the merge is an elementwise sum, so output is independent
    // of scheduling.
    let partials: Vec<Vec<u64>> = (1..=m)
        .into_par_iter()
        .map(|first| {
            let mut counts = vec![0u64; width];
            let mut spins = vec![1usize; n];
            spins[0] = first;
            // prefix[i] = energy of bonds 1..i (bond i joins spins i-1, i, 0-based)
            let mut prefix = vec![0u64; n];
            let recompute = |spins: &[usize], prefix: &mut [u64], from: usize| {
                for i in from.max(1)..n {
                    let e = if rule.excited(spins[i - 1], spins[i]) { f[i - 1] } else { 0 };
                    prefix[i] = prefix[i - 1] + e;
                }
            };
            recompute(&spins, &mut prefix, 1);
            loop {
                counts[prefix[n - 1] as usize] += 1;
                // odometer over spins[1..]
                let mut pos = n - 1;
                loop {
                    if pos == 0 {
                        return counts;
                    }
                    if spins[pos] < m {
                        spins[pos] += 1;
                        break;
                    }
                    spins[pos] = 1;
                    pos -= 1;
                }
                recompute(&spins, &mut prefix, pos);
            }
        })
        .collect();

    let mut total = vec![0u64; width];
    for part in &partials {
        for (t, c) in total.iter_mut().zip(part) {
            *t += c;
        }
    }
    DensityTable::from_counts(
        disp.energy_scale(),
        total.into_iter().enumerate().map(|(e, c)| (e as u64, BigUint::from(c))),
        BigUint::from(m).pow(n as u32),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Alpha;

    fn table(d: &DensityTable) -> Vec<(u64, u64)> {
        d.entries().iter().map(|(e, c)| (*e, u64::try_from(c).unwrap())).collect()
    }

    #[test]
    fn delta_examples() {
        let f = DeltaRule::Ferro;
        assert_eq!(delta(f, 2, 1, 2).unwrap(), 1);
        assert_eq!(delta(f, 2, 2, 2).unwrap(), 0);
        assert_eq!(delta(f, 2, 2, 1).unwrap(), 0);

        let af = DeltaRule::Antiferro;
        assert_eq!(delta(af, 2, 1, 2).unwrap(), 0);
        assert_eq!(delta(af, 2, 2, 2).unwrap(), 1);

        let s = DeltaRule::Susy { bosonic: 1, fermionic: 1 };
        assert_eq!(delta(s, 2, 1, 1).unwrap(), 0);
        assert_eq!(delta(s, 2, 2, 2).unwrap(), 1);
        assert_eq!(delta(s, 2, 2, 1).unwrap(), 1);
        assert_eq!(delta(s, 2, 1, 2).unwrap(), 0);
    }

    #[test]
    fn delta_errors() {
        assert!(matches!(delta(DeltaRule::Ferro, 2, 0, 1), Err(Error::SpinOutOfRange { value: 0, m: 2 })));
        assert!(matches!(delta(DeltaRule::Ferro, 2, 1, 3), Err(Error::SpinOutOfRange { value: 3, m: 2 })));
        assert!(delta(DeltaRule::Susy { bosonic: 1, fermionic: 2 }, 2, 1, 1).is_err());
    }

    #[test]
    fn motif_examples() {
        let c = SpinConfiguration::new(vec![1, 2, 1], 2).unwrap();
        assert_eq!(motif_of(DeltaRule::Ferro, &c).unwrap(), MotifVector::from_bits(&[1, 0]));
        assert_eq!(motif_of(DeltaRule::Antiferro, &c).unwrap(), MotifVector::from_bits(&[0, 1]));
        let flat = SpinConfiguration::new(vec![2, 2, 2], 2).unwrap();
        assert_eq!(motif_of(DeltaRule::Ferro, &flat).unwrap(), MotifVector::from_bits(&[0, 0]));
        assert!(SpinConfiguration::new(vec![1, 3], 2).is_err());
    }

    #[test]
    fn motif_energy_examples() {
        let pf = dispersion(&ChainSpec::pf(3, 2, Epsilon::Ferro).unwrap());
        assert_eq!(motif_energy(&MotifVector::from_bits(&[1, 0]), &pf).unwrap(), BigRational::from_integer(1.into()));
        let hs = dispersion(&ChainSpec::hs(4, 2, Epsilon::Ferro).unwrap());
        assert_eq!(motif_energy_scaled(&MotifVector::from_bits(&[1, 1, 1]), &hs).unwrap(), 10);
        assert_eq!(motif_energy_scaled(&MotifVector::from_bits(&[0, 0, 0]), &hs).unwrap(), 0);
        assert!(matches!(
            motif_energy(&MotifVector::from_bits(&[1, 1]), &hs),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let pf = ChainSpec::pf(3, 2, Epsilon::Ferro).unwrap();
        let d = brute_force_density(&pf, DeltaRule::Ferro, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(table(&d), vec![(0, 4), (1, 2), (2, 2)]);

        let d = brute_force_density(&pf, DeltaRule::Antiferro, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(table(&d), vec![(1, 2), (2, 2), (3, 4)]);

        let hs = ChainSpec::hs(4, 2, Epsilon::Ferro).unwrap();
        let d = brute_force_density(&hs, DeltaRule::Ferro, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(table(&d), vec![(0, 5), (3, 6), (4, 4), (6, 1)]);
    }

    #[test]
    fn brute_force_cap() {
        let hs = ChainSpec::hs(10, 2, Epsilon::Ferro).unwrap();
        let err = brute_force_density(&hs, DeltaRule::Ferro, 1000).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
        assert!(err.to_string().contains("DP"));
    }

    #[test]
    fn single_value_spin_has_one_level() {
        let disp = dispersion(&ChainSpec::hs(6, 2, Epsilon::Ferro).unwrap());
        let d = brute_force_density_with(&disp, 1, DeltaRule::Ferro, 10).unwrap();
        assert_eq!(table(&d), vec![(0, 1)]);
    }

    #[test]
    fn ferro_antiferro_duality_configurationwise() {
        let spec = ChainSpec::fi(5, 3, Epsilon::Ferro, Alpha::new(3, 2).unwrap()).unwrap();
        let disp = dispersion(&spec);
        let total = disp.scaled_sum();
        for code in 0..3usize.pow(5) {
            let spins: Vec<usize> = (0..5).map(|i| code / 3usize.pow(i) % 3 + 1).collect();
            let c = SpinConfiguration::new(spins, 3).unwrap();
            let ef = motif_energy_scaled(&motif_of(DeltaRule::Ferro, &c).unwrap(), &disp).unwrap();
            let af_motif = motif_of(DeltaRule::Antiferro, &c).unwrap();
            assert_eq!(af_motif, motif_of(DeltaRule::Ferro, &c).unwrap().complement());
            assert_eq!(motif_energy_scaled(&af_motif, &disp).unwrap(), total - ef);
        }
    }

    #[test]
    fn susy_generator_counts() {
        let disp = dispersion(&ChainSpec::pf(4, 3, Epsilon::Ferro).unwrap());
        let rule = DeltaRule::Susy { bosonic: 2, fermionic: 1 };
        let d = brute_force_density_with(&disp, 3, rule, 1000).unwrap();
        assert_eq!(d.total(), &BigUint::from(81u32));
        assert!(brute_force_density_with(&disp, 2, rule, 1000).is_err());
    }
}
