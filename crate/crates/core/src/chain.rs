//! Chain families, their dispersion relations and the normalized bond weights
//! `γ_j = F(j) / (m σ)` that drive the characteristic-function machinery.
//!
//! Dispersion values are kept on an integer grid: every `F(i)` is stored as
//! `D·F(i)` where `D` is the energy scale (1 for HS and PF, the denominator of
//! `α` for FI). Exact rationals are recovered on demand.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// Haldane–Shastry: equally spaced sites on a circle, `F(i) = i(N−i)`.
    #[serde(rename = "HS", alias = "hs")]
    Hs,
    /// Polychronakos–Frahm: sites at Hermite zeros, `F(i) = i`.
    #[serde(rename = "PF", alias = "pf")]
    Pf,
    /// Frahm–Inozemtsev: sites from Laguerre zeros, `F(i) = i(α+i−1)`.
    #[serde(rename = "FI", alias = "fi")]
    Fi,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Hs, Family::Pf, Family::Fi];

    pub fn name(self) -> &'static str {
        match self {
            Family::Hs => "HS",
            Family::Pf => "PF",
            Family::Fi => "FI",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" => Ok(Family::Hs),
            "pf" => Ok(Family::Pf),
            "fi" => Ok(Family::Fi),
            _ => Err(Error::InvalidSpec(format!("unknown family {s:?} (expected hs, pf or fi)"))),
        }
    }
}

/// Sign of the exchange term: `+1` ferromagnetic, `−1` antiferromagnetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Epsilon {
    Ferro,
    Antiferro,
}

impl Epsilon {
    pub const BOTH: [Epsilon; 2] = [Epsilon::Ferro, Epsilon::Antiferro];

    pub fn sign(self) -> i32 {
        match self {
            Epsilon::Ferro => 1,
            Epsilon::Antiferro => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Epsilon::Ferro => Epsilon::Antiferro,
            Epsilon::Antiferro => Epsilon::Ferro,
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Epsilon::Ferro => "ferro",
            Epsilon::Antiferro => "antiferro",
        })
    }
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i32(self.sign())
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(1) => Ok(Epsilon::Ferro),
            Raw::Int(-1) => Ok(Epsilon::Antiferro),
            Raw::Str(s) if s.eq_ignore_ascii_case("ferro") => Ok(Epsilon::Ferro),
            Raw::Str(s) if s.eq_ignore_ascii_case("antiferro") => Ok(Epsilon::Antiferro),
            _ => Err(serde::de::Error::custom("epsilon must be 1, -1, \"ferro\" or \"antiferro\"")),
        }
    }
}

/// Positive rational FI parameter, always stored in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Alpha {
    num: u64,
    den: u64,
}

impl Alpha {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidSpec(format!("alpha must be a positive rational, got {num}/{den}")));
        }
        let g = num.gcd(&den);
        Ok(Alpha { num: num / g, den: den / g })
    }

    pub fn integer(value: u64) -> Result<Self> {
        Alpha::new(value, 1)
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("cannot parse alpha {s:?} (expected p or p/q)"));
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let num = p.parse::<u64>().map_err(|_| bad())?;
        let den = q.parse::<u64>().map_err(|_| bad())?;
        Alpha::new(num, den)
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.num, self.den].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [num, den] = <[u64; 2]>::deserialize(d)?;
        Alpha::new(num, den).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
struct RawSpec {
    family: Family,
    #[serde(rename = "N")]
    n: usize,
    m: usize,
    epsilon: Epsilon,
    #[serde(default)]
    alpha: Option<Alpha>,
}

/// The configuration every computation consumes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ChainSpec {
    family: Family,
    #[serde(rename = "N")]
    n: usize,
    m: usize,
    epsilon: Epsilon,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Alpha>,
}

impl TryFrom<RawSpec> for ChainSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        ChainSpec::new(raw.family, raw.n, raw.m, raw.epsilon, raw.alpha)
    }
}

impl ChainSpec {
    pub fn new(family: Family, n: usize, m: usize, epsilon: Epsilon, alpha: Option<Alpha>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!("N must be at least 2, got {n}")));
        }
        if m < 2 {
            return Err(Error::InvalidSpec(format!("m must be at least 2, got {m}")));
        }
        match (family, alpha) {
            (Family::Fi, None) => return Err(Error::InvalidSpec("FI chain requires alpha".into())),
            (Family::Hs | Family::Pf, Some(_)) => {
                return Err(Error::InvalidSpec(format!("alpha is only meaningful for FI, not {family}")))
            }
            _ => {}
        }
        Ok(ChainSpec { family, n, m, epsilon, alpha })
    }

    pub fn hs(n: usize, m: usize, epsilon: Epsilon) -> Result<Self> {
        ChainSpec::new(Family::Hs, n, m, epsilon, None)
    }

    pub fn pf(n: usize, m: usize, epsilon: Epsilon) -> Result<Self> {
        ChainSpec::new(Family::Pf, n, m, epsilon, None)
    }

    pub fn fi(n: usize, m: usize, epsilon: Epsilon, alpha: Alpha) -> Result<Self> {
        ChainSpec::new(Family::Fi, n, m, epsilon, Some(alpha))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Number of spins `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Internal dimension `m` of each spin.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn epsilon(&self) -> Epsilon {
        self.epsilon
    }

    pub fn alpha(&self) -> Option<Alpha> {
        self.alpha
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        ChainSpec::new(self.family, n, self.m, self.epsilon, self.alpha)
    }

    pub fn with_epsilon(&self, epsilon: Epsilon) -> Self {
        ChainSpec { epsilon, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ChainSpec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} N={} m={} {}", self.family, self.n, self.m, self.epsilon)?;
        if let Some(a) = self.alpha {
            write!(f, " alpha={a}")?;
        }
        Ok(())
    }
}

/// `F(1..N−1)` stored as integers `D·F(i)` on the energy grid of scale `D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DispersionTable {
    scaled: Vec<u64>,
    energy_scale: u64,
}

impl DispersionTable {
    /// Builds a table from grid values; all must be strictly positive.
    pub fn from_scaled(scaled: Vec<u64>, energy_scale: u64) -> Result<Self> {
        if energy_scale == 0 {
            return Err(Error::InvalidSpec("energy scale must be positive".into()));
        }
        if let Some(i) = scaled.iter().position(|&v| v == 0) {
            return Err(Error::InvalidSpec(format!("dispersion value F({}) must be positive", i + 1)));
        }
        Ok(DispersionTable { scaled, energy_scale })
    }

    /// Number of bonds, `N − 1`.
    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    pub fn energy_scale(&self) -> u64 {
        self.energy_scale
    }

    /// `D·F(i)` for `i = 1..N−1` (index 0 holds `F(1)`).
    pub fn scaled(&self) -> &[u64] {
        &self.scaled
    }

    /// Exact `F(i)`, 1-based.
    pub fn value(&self, i: usize) -> BigRational {
        BigRational::new(BigInt::from(self.scaled[i - 1]), BigInt::from(self.energy_scale))
    }

    pub fn values(&self) -> Vec<BigRational> {
        (1..=self.len()).map(|i| self.value(i)).collect()
    }

    pub fn values_f64(&self) -> Vec<f64> {
        let d = self.energy_scale as f64;
        self.scaled.iter().map(|&v| v as f64 / d).collect()
    }

    /// `D·Σ F(i)`, the largest grid energy.
    pub fn scaled_sum(&self) -> u64 {
        self.scaled.iter().sum()
    }

    pub fn sum(&self) -> BigRational {
        BigRational::new(BigInt::from(self.scaled_sum()), BigInt::from(self.energy_scale))
    }
}

pub fn dispersion(spec: &ChainSpec) -> DispersionTable {
    let n = spec.n as u64;
    let (scaled, scale) = match spec.family {
        Family::Hs => ((1..n).map(|i| i * (n - i)).collect(), 1),
        Family::Pf => ((1..n).collect(), 1),
        Family::Fi => {
            let a = spec.alpha.expect("validated FI spec has alpha");
            // D·i(α+i−1) = i(p + q(i−1)) with α = p/q
            let (p, q) = (a.numer(), a.denom());
            ((1..n).map(|i| i * (p + q * (i - 1))).collect(), q)
        }
    };
    DispersionTable { scaled, energy_scale: scale }
}

/// `γ_j = F(j) / (m σ)` for `j = 1..N−1`.
pub fn gamma_values(spec: &ChainSpec, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let denom = spec.m as f64 * sigma;
    Ok(dispersion(spec).values_f64().into_iter().map(|f| f / denom).collect())
}
