//! Exact level densities.
//!
//! [`density_dp`] runs the transfer-matrix recursion with `q` kept formal: the
//! state after bond `j` is, for each spin value `n`, the coefficient array of
//! prefixes `(n_1, …, n_j)` ending in `n`, indexed by accumulated grid energy.
//! [`z_composition`] expands the composition form of the partition function
//! and is kept as an independent check on the DP.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::chain::{dispersion, ChainSpec, DispersionTable, Epsilon};
use crate::error::{Error, Result};
use crate::motif::DeltaRule;
use crate::wide::WideCounts;

/// Default memory budget for the DP state, in bytes.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

/// Default largest `N` accepted by [`z_composition`] (`2^(N−1)` terms).
pub const DEFAULT_COMPOSITION_CAP: usize = 24;

/// Map from grid energy (`D·E`) to degeneracy; only nonzero levels are kept,
/// in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityTable {
    energy_scale: u64,
    entries: Vec<(u64, BigUint)>,
    total: BigUint,
}

impl DensityTable {
    /// Collects `(grid energy, count)` pairs, dropping zero counts and merging
    /// repeated energies. Fails if the counts do not sum to `expected_total`.
    pub fn from_counts(
        energy_scale: u64,
        counts: impl IntoIterator<Item = (u64, BigUint)>,
        expected_total: BigUint,
    ) -> Result<Self> {
        if energy_scale == 0 {
            return Err(Error::InvalidSpec("energy scale must be positive".into()));
        }
        let mut entries: Vec<(u64, BigUint)> = counts.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        entries.sort_by_key(|(e, _)| *e);
        entries.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 += std::mem::take(&mut later.1);
                true
            } else {
                false
            }
        });
        let sum: BigUint = entries.iter().map(|(_, c)| c).sum();
        if sum != expected_total {
            return Err(Error::Inconsistent(format!(
                "degeneracies sum to {sum}, expected {expected_total}"
            )));
        }
        Ok(DensityTable { energy_scale, entries, total: sum })
    }

    pub fn energy_scale(&self) -> u64 {
        self.energy_scale
    }

    pub fn entries(&self) -> &[(u64, BigUint)] {
        &self.entries
    }

    /// Total number of states, `m^N`.
    pub fn total(&self) -> &BigUint {
        &self.total
    }

    /// Number of distinct levels.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn degeneracy(&self, grid_energy: u64) -> BigUint {
        match self.entries.binary_search_by_key(&grid_energy, |(e, _)| *e) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => BigUint::zero(),
        }
    }

    pub fn energy(&self, grid_energy: u64) -> BigRational {
        BigRational::new(BigInt::from(grid_energy), BigInt::from(self.energy_scale))
    }

    pub fn energy_f64(&self, grid_energy: u64) -> f64 {
        grid_energy as f64 / self.energy_scale as f64
    }

    /// Distinct energies with their normalized weights `deg / m^N`.
    pub fn probabilities(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|(e, c)| (self.energy_f64(*e), ratio_f64(c, &self.total))).collect()
    }

    /// Mirror image `E ↦ S − E` on the grid, `S` a grid energy.
    pub fn reflected(&self, scaled_sum: u64) -> Result<DensityTable> {
        if let Some((e, _)) = self.entries.last() {
            if *e > scaled_sum {
                return Err(Error::InvalidSpec(format!("cannot reflect level {e} about {scaled_sum}")));
            }
        }
        DensityTable::from_counts(
            self.energy_scale,
            self.entries.iter().map(|(e, c)| (scaled_sum - e, c.clone())),
            self.total.clone(),
        )
    }

    /// Every eigenvalue with multiplicity, ascending. Intended for small tables.
    pub fn expand(&self) -> Result<Vec<f64>> {
        let count = self.total.to_usize().filter(|&c| c <= 1 << 26).ok_or_else(|| {
            Error::size_limit("density expansion", &self.total, 1u64 << 26, "")
        })?;
        let mut out = Vec::with_capacity(count);
        for (e, c) in &self.entries {
            let c = c.to_usize().expect("bounded by total");
            out.extend(std::iter::repeat(self.energy_f64(*e)).take(c));
        }
        Ok(out)
    }

    /// `energy,degeneracy` rows, ascending, energies as exact rationals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy,degeneracy\n");
        for (e, c) in &self.entries {
            let _ = writeln!(out, "{},{}", format_grid_energy(*e, self.energy_scale), c);
        }
        out
    }

    /// JSON object mapping exact energies to degeneracies. Degeneracies are
    /// written as bare integer literals of arbitrary size.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{");
        for (i, (e, c)) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "\"{}\":{}", format_grid_energy(*e, self.energy_scale), c);
        }
        out.push('}');
        out
    }
}

/// `num / den` to within a few ulps without a gcd: the quotient is taken
/// with 64 significant bits and then scaled back.
fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() || den.is_zero() {
        return 0.0;
    }
    let shift = (den.bits() + 64).saturating_sub(num.bits());
    let q = (num << shift) / den;
    // keep the top 64 bits so the conversion to f64 rounds once
    let drop = q.bits().saturating_sub(64);
    let top = (q >> drop).to_u64().unwrap_or(u64::MAX);
    libm::ldexp(top as f64, (drop as i64 - shift as i64) as i32)
}

/// Formats `grid / scale` as `p/q` in lowest terms, or as an integer.
pub fn format_grid_energy(grid: u64, scale: u64) -> String {
    let g = grid.gcd(&scale);
    let (p, q) = (grid / g, scale / g);
    if q == 1 {
        p.to_string()
    } else {
        format!("{p}/{q}")
    }
}

pub fn density_dp(spec: &ChainSpec, rule: DeltaRule, memory_budget: u64) -> Result<DensityTable> {
    density_dp_with(&dispersion(spec), spec.m(), rule, memory_budget)
}

/// Transfer-matrix DP over an arbitrary dispersion table and any `m ≥ 1`.
pub fn density_dp_with(
    disp: &DispersionTable,
    m: usize,
    rule: DeltaRule,
    memory_budget: u64,
) -> Result<DensityTable> {
    if m == 0 {
        return Err(Error::InvalidSpec("m must be positive".into()));
    }
    rule.validate(m)?;
    let n = disp.len() + 1;
    let total = BigUint::from(m).pow(n as u32);
    let limbs = WideCounts::limbs_for(&total);
    let width = disp.scaled_sum() as usize + 1;

    let predicted = 2u128 * m as u128 * width as u128 * limbs as u128 * 8;
    if predicted > memory_budget as u128 {
        return Err(Error::size_limit(
            "density DP state (bytes)",
            format!("{predicted} (support {width} levels x {m} spin values x {limbs} limbs x 2)"),
            memory_budget,
            "",
        ));
    }

    let mut cur: Vec<WideCounts> = (0..m).map(|_| WideCounts::zeros(width, limbs)).collect();
    let mut next = cur.clone();
    for state in &mut cur {
        state.set_small(0, 1);
    }
    let mut support = 1usize;
    for &f in disp.scaled() {
        let f = f as usize;
        let new_support = support + f;
        for (to, target) in next.iter_mut().enumerate() {
            target.clear_prefix(new_support);
            for (from, source) in cur.iter().enumerate() {
                let shift = if rule.excited(from + 1, to + 1) { f } else { 0 };
                target.add_shifted(source, support, shift)?;
            }
        }
        std::mem::swap(&mut cur, &mut next);
        support = new_support;
    }

    let (first, rest) = cur.split_first_mut().expect("m >= 1");
    for other in rest.iter() {
        first.add_shifted(other, support, 0)?;
    }
    let counts = (0..first.len())
        .filter(|&e| !first.is_zero(e))
        .map(|e| (e as u64, first.get(e)));
    DensityTable::from_counts(disp.energy_scale(), counts, total)
}

/// Spin degeneracy factor of a block of `k` sites: `C(m+k−1, k)` for the
/// ferro chain, `C(m, k)` for the antiferro chain.
pub fn block_degeneracy(m: usize, k: usize, epsilon: Epsilon) -> BigUint {
    let (top, bottom) = match epsilon {
        Epsilon::Ferro => (m + k - 1, k),
        Epsilon::Antiferro => (m, k),
    };
    if bottom > top {
        return BigUint::zero();
    }
    binomial(top, bottom)
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// An ordered partition `(k_1, …, k_r)` of `N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Composition {
    parts: Vec<usize>,
}

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidSpec(format!("composition parts must be positive, got {parts:?}")));
        }
        Ok(Composition { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `K_i = k_1 + … + k_i` for `i = 1..r−1`.
    pub fn partial_sums(&self) -> Vec<usize> {
        self.parts[..self.parts.len() - 1]
            .iter()
            .scan(0, |acc, &k| {
                *acc += k;
                Some(*acc)
            })
            .collect()
    }

    /// `{1, …, N−1} \ {K_1, …, K_{r−1}}`.
    pub fn complement_points(&self) -> Vec<usize> {
        let cuts = self.partial_sums();
        (1..self.total()).filter(|k| !cuts.contains(k)).collect()
    }

    /// All compositions of `n`, in order of the binary cut mask.
    pub fn all(n: usize) -> Vec<Composition> {
        assert!(n >= 1 && n < 64);
        (0u64..1 << (n - 1))
            .map(|mask| {
                let mut parts = Vec::new();
                let mut len = 1;
                for pos in 1..n {
                    if mask >> (pos - 1) & 1 == 1 {
                        parts.push(len);
                        len = 1;
                    } else {
                        len += 1;
                    }
                }
                parts.push(len);
                Composition { parts }
            })
            .collect()
    }
}

/// Expands the composition-sum form of `Z(q)` into a density table.
pub fn z_composition(spec: &ChainSpec, epsilon: Epsilon, max_n: usize) -> Result<DensityTable> {
    z_composition_with(&dispersion(spec), spec.m(), epsilon, max_n)
}

pub fn z_composition_with(disp: &DispersionTable, m: usize, epsilon: Epsilon, max_n: usize) -> Result<DensityTable> {
    let n = disp.len() + 1;
    if n > max_n {
        return Err(Error::size_limit("composition expansion (N)", n, max_n, " (2^(N-1) terms)"));
    }
    let d: Vec<BigUint> = (0..=n).map(|k| if k == 0 { BigUint::zero() } else { block_degeneracy(m, k, epsilon) }).collect();

    // Every partial sum and product is bounded by 2^(N−1) S(N), S(N) being the
    // sum over compositions of Π d(k_i): the (1 − q^F) factors contribute at
    // most 2^(N−1) in absolute coefficient sum. Below the integer width,
    // wrapping arithmetic is therefore exact.
    let mut s = vec![BigUint::zero(); n + 1];
    s[0] = BigUint::from(1u32);
    for len in 1..=n {
        s[len] = (1..=len).map(|k| &d[k] * &s[len - k]).sum();
    }
    let bound = &s[n] << (n - 1);
    let counts = if bound.bits() < 63 {
        expand::<i64>(disp, m, epsilon, &d)?
    } else if bound.bits() < 127 {
        expand::<i128>(disp, m, epsilon, &d)?
    } else {
        return Err(Error::Overflow("composition expansion (coefficients may exceed 127 bits)"));
    };
    DensityTable::from_counts(disp.energy_scale(), counts, BigUint::from(m).pow(n as u32))
}

/// Fixed-width integer with wrapping ring operations.
trait Coeff: Copy + Default + Eq + Ord + TryFrom<u128> + Into<i128> {
    fn one() -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
}

macro_rules! coeff {
    ($t:ty) => {
        impl Coeff for $t {
            fn one() -> Self {
                1
            }
            fn add(self, o: Self) -> Self {
                self.wrapping_add(o)
            }
            fn sub(self, o: Self) -> Self {
                self.wrapping_sub(o)
            }
            fn mul(self, o: Self) -> Self {
                self.wrapping_mul(o)
            }
        }
    };
}
coeff!(i64);
coeff!(i128);

fn expand<T: Coeff>(disp: &DispersionTable, m: usize, epsilon: Epsilon, d: &[BigUint]) -> Result<Vec<(u64, BigUint)>> {
    let n = disp.len() + 1;
    let d = d
        .iter()
        .map(|x| x.to_u128().and_then(|v| T::try_from(v).ok()).ok_or(Error::Overflow("spin degeneracy factor")))
        .collect::<Result<Vec<T>>>()?;
    let width = disp.scaled_sum() as usize + 1;
    let mut ex = Expander {
        f: disp.scaled(),
        n,
        m,
        antiferro: epsilon == Epsilon::Antiferro,
        d,
        polys: vec![vec![T::default(); width]; n],
        degree: vec![0usize; n],
        acc: vec![T::default(); width],
    };
    ex.polys[0][0] = T::one();
    ex.descend(1, 0, T::one());

    let mut counts = Vec::with_capacity(width);
    for (e, &c) in ex.acc.iter().enumerate() {
        let c: i128 = c.into();
        if c < 0 {
            return Err(Error::Inconsistent(format!("negative coefficient {c} at grid energy {e}")));
        }
        counts.push((e as u64, BigUint::from(c as u128)));
    }
    Ok(counts)
}

/// Depth-first walk over cut patterns. At depth `pos` the polynomial
/// `polys[pos−1]` holds the product of factors for positions `1..pos−1`.
struct Expander<'a, T> {
    f: &'a [u64],
    n: usize,
    m: usize,
    antiferro: bool,
    d: Vec<T>,
    polys: Vec<Vec<T>>,
    degree: Vec<usize>,
    acc: Vec<T>,
}

impl<T: Coeff> Expander<'_, T> {
    fn descend(&mut self, pos: usize, last_cut: usize, weight: T) {
        let zero = T::default();
        if pos == self.n {
            let w = weight.mul(self.d[self.n - last_cut]);
            if w == zero {
                return;
            }
            let poly = &self.polys[pos - 1];
            for (a, &c) in self.acc.iter_mut().zip(&poly[..=self.degree[pos - 1]]) {
                *a = a.add(c.mul(w));
            }
            return;
        }
        let f = self.f[pos - 1] as usize;
        let deg = self.degree[pos - 1];

        // cut at `pos`: closes a block of length pos − last_cut, factor q^F(pos)
        let dk = self.d[pos - last_cut];
        if dk != zero {
            let (prev, rest) = self.polys.split_at_mut(pos);
            let (src, dst) = (&prev[pos - 1], &mut rest[0]);
            dst[..f].fill(zero);
            dst[f..=f + deg].copy_from_slice(&src[..=deg]);
            self.degree[pos] = deg + f;
            self.descend(pos + 1, pos, weight.mul(dk));
        }

        // no cut: the block keeps growing, factor (1 − q^F(pos)); an
        // antiferro block longer than m has zero weight whatever follows
        if !(self.antiferro && pos + 1 - last_cut > self.m) {
            let (prev, rest) = self.polys.split_at_mut(pos);
            let (src, dst) = (&prev[pos - 1], &mut rest[0]);
            let new_deg = deg + f;
            dst[..=deg].copy_from_slice(&src[..=deg]);
            dst[deg + 1..=new_deg].fill(zero);
            for e in 0..=deg {
                dst[e + f] = dst[e + f].sub(src[e]);
            }
            self.degree[pos] = new_deg;
            self.descend(pos + 1, last_cut, weight);
        }
    }
}

/// `Z(q) = Σ_E deg(E) q^E` at complex `q`. For fractional energies
/// (`energy_scale > 1`) the principal branch of `q^E` is used.
pub fn partition_function_at(density: &DensityTable, q: Complex64) -> Complex64 {
    let scale = density.energy_scale();
    let deg = |c: &BigUint| c.to_f64().unwrap_or(f64::INFINITY);
    if scale == 1 {
        // Horner from the top level down
        let mut acc = Complex64::new(0.0, 0.0);
        let mut prev: Option<u64> = None;
        for (e, c) in density.entries().iter().rev() {
            if let Some(p) = prev {
                acc *= q.powu((p - e) as u32);
            }
            acc += deg(c);
            prev = Some(*e);
        }
        acc * q.powu(prev.unwrap_or(0) as u32)
    } else {
        density
            .entries()
            .iter()
            .map(|(e, c)| q.powf(density.energy_f64(*e)) * deg(c))
            .sum()
    }
}

/// `Σ_E p(E) e^{iθE}` with normalized weights `p = deg / m^N`, i.e.
/// `m^{−N} Z(e^{iθ})` on the unit circle with no branch ambiguity.
pub fn normalized_partition_on_circle(density: &DensityTable, theta: f64) -> Complex64 {
    normalized_partition_on_circle_many(density, &[theta])[0]
}

/// [`normalized_partition_on_circle`] at many angles, converting the exact
/// weights to floating point once.
pub fn normalized_partition_on_circle_many(density: &DensityTable, thetas: &[f64]) -> Vec<Complex64> {
    let probs = density.probabilities();
    thetas
        .iter()
        .map(|&theta| probs.iter().map(|&(e, p)| Complex64::from_polar(p, theta * e)).sum())
        .collect()
}
