//! Dense-Hamiltonian cross-check for small chains.
//!
//! Builds `H = Σ_{i<j} h_ij (1 − ε S_ij)` in the canonical spin basis,
//! diagonalizes it with cyclic Jacobi rotations and compares the eigenvalue
//! multiset against the motif spectrum.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::chain::{ChainSpec, Epsilon, Family};
use crate::density::{density_dp, DensityTable, DEFAULT_MEMORY_BUDGET};
use crate::error::{Error, Result};

pub const DEFAULT_SITE_CAP: usize = 8;
pub const DEFAULT_DENSE_CAP: usize = 4096;

const JACOBI_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;
const ZERO_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteLayout {
    pub xi: Vec<f64>,
}

/// Eigenvalues of a real symmetric matrix (row-major, `n×n`), ascending.
///
/// Cyclic Jacobi: sweeps over all `(p, q)` pairs until the off-diagonal
/// Frobenius norm drops below `1e-10 · max(1, ‖A‖_F)`.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    s += a[p * n + q] * a[p * n + q];
                }
            }
        }
        s.sqrt()
    };

    let mut off = off_norm(&a);
    let mut sweeps = 0;
    while off >= JACOBI_TOL * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { what: "cyclic Jacobi eigensolver", residual: off });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
        sweeps += 1;
        off = off_norm(&a);
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Three-term recurrence `b_{k+1} p_{k+1} = (x − a_k) p_k − b_k p_{k−1}`,
/// `p_0 = 1`; returns `(p_N(x), p_N'(x))`.
fn recurrence(x: f64, diag: &[f64], off: &[f64]) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..diag.len() {
        let b_k = if k == 0 { 0.0 } else { off[k - 1] };
        let b_next = off.get(k).copied().unwrap_or(1.0);
        let p_next = ((x - diag[k]) * p - b_k * p_prev) / b_next;
        let d_next = (p + (x - diag[k]) * d - b_k * d_prev) / b_next;
        (p_prev, p) = (p, p_next);
        (d_prev, d) = (d, d_next);
    }
    (p, d)
}

/// Zeros of the orthogonal polynomial with Jacobi matrix `(diag, off)`:
/// eigenvalues of the tridiagonal matrix, then one Newton step each.
/// `off` has length `diag.len()`; its last entry only normalizes `p_N`.
fn orthogonal_zeros(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut j = vec![0.0; n * n];
    for k in 0..n {
        j[k * n + k] = diag[k];
        if k + 1 < n {
            j[k * n + k + 1] = off[k];
            j[(k + 1) * n + k] = off[k];
        }
    }
    let mut zeros = symmetric_eigenvalues(&j, n)?;
    for x in &mut zeros {
        let (p, d) = recurrence(*x, diag, off);
        *x -= p / d;
        let (p, d) = recurrence(*x, diag, off);
        let residual = (p / d).abs();
        if !(residual < ZERO_RESIDUAL_TOL * x.abs().max(1.0)) {
            return Err(Error::NoConvergence { what: "orthogonal polynomial zero", residual });
        }
    }
    Ok(zeros)
}

/// Zeros of the Hermite polynomial `H_N`, ascending.
pub fn hermite_zeros(n: usize) -> Result<Vec<f64>> {
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..=n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    orthogonal_zeros(&diag, &off)
}

/// Zeros of the generalized Laguerre polynomial `L_N^{(a)}`, ascending.
pub fn laguerre_zeros(n: usize, a: f64) -> Result<Vec<f64>> {
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + a + 1.0).collect();
    let off: Vec<f64> = (1..=n).map(|k| (k as f64 * (k as f64 + a)).sqrt()).collect();
    orthogonal_zeros(&diag, &off)
}

/// Relative Newton step `|p_N(x)/p_N'(x)| / max(1, |x|)` at a claimed Hermite
/// or Laguerre zero; scale-free, unlike `|p_N(x)|` itself.
pub fn zero_residual(family: Family, n: usize, a: f64, x: f64) -> f64 {
    let (diag, off): (Vec<f64>, Vec<f64>) = match family {
        Family::Pf => (vec![0.0; n], (1..=n).map(|k| (k as f64 / 2.0).sqrt()).collect()),
        _ => (
            (0..n).map(|k| 2.0 * k as f64 + a + 1.0).collect(),
            (1..=n).map(|k| (k as f64 * (k as f64 + a)).sqrt()).collect(),
        ),
    };
    let (p, d) = recurrence(x, &diag, &off);
    (p / d).abs() / x.abs().max(1.0)
}

pub fn chain_sites(spec: &ChainSpec, cap: usize) -> Result<SiteLayout> {
    let n = spec.n();
    if n > cap {
        return Err(Error::size_limit("oracle site layout (N)", n, cap, ""));
    }
    let xi = match spec.family() {
        Family::Hs => (1..=n).map(|k| k as f64 * PI / n as f64).collect(),
        Family::Pf => hermite_zeros(n)?,
        Family::Fi => {
            let alpha = spec.alpha().expect("validated FI spec has alpha").to_f64();
            laguerre_zeros(n, alpha - 1.0)?.into_iter().map(|z| 0.5 * z.ln()).collect()
        }
    };
    Ok(SiteLayout { xi })
}

fn coupling(family: Family, dx: f64) -> f64 {
    match family {
        Family::Hs => 0.5 / dx.sin().powi(2),
        Family::Pf => 1.0 / (dx * dx),
        Family::Fi => 0.5 / dx.sinh().powi(2),
    }
}

/// Real symmetric operator on `(ℂ^m)^{⊗N}` in the canonical basis; basis index
/// `Σ_i (n_i − 1) m^{N−i}`, site 1 most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseOperator {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }
}

/// Pairwise couplings `h_ij`, `i < j`.
pub fn pair_couplings(spec: &ChainSpec, sites: &SiteLayout) -> Vec<(usize, usize, f64)> {
    let n = sites.xi.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j, coupling(spec.family(), sites.xi[i] - sites.xi[j])));
        }
    }
    out
}

fn dense_dim(spec: &ChainSpec, cap: usize) -> Result<usize> {
    let (n, m) = (spec.n(), spec.m());
    (m as u64)
        .checked_pow(n as u32)
        .filter(|&d| d <= cap as u64)
        .map(|d| d as usize)
        .ok_or_else(|| Error::size_limit("dense Hamiltonian dimension", format!("{m}^{n}"), cap, ""))
}

/// Basis index after `S_ij` swaps the digits at sites `i` and `j`.
fn swap_sites(s: usize, i: usize, j: usize, place: &[usize], m: usize) -> usize {
    let (ni, nj) = (s / place[i] % m, s / place[j] % m);
    s + nj * place[i] + ni * place[j] - ni * place[i] - nj * place[j]
}

pub fn build_hamiltonian(spec: &ChainSpec, cap: usize) -> Result<DenseOperator> {
    let dim = dense_dim(spec, cap)?;
    let (n, m) = (spec.n(), spec.m());
    let sites = chain_sites(spec, usize::MAX)?;
    let eps = spec.epsilon().sign() as f64;
    let place: Vec<usize> = (0..n).map(|i| m.pow((n - 1 - i) as u32)).collect();

    let mut data = vec![0.0; dim * dim];
    for (i, j, h) in pair_couplings(spec, &sites) {
        for s in 0..dim {
            data[s * dim + s] += h;
            data[swap_sites(s, i, j, &place, m) * dim + s] -= eps * h;
        }
    }
    Ok(DenseOperator { dim, data })
}

/// Basis states grouped by spin content (how many sites carry each value).
/// Permutation operators never connect different groups.
pub fn content_sectors(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut sectors: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
    for s in 0..m.pow(n as u32) {
        let mut counts = vec![0u8; m];
        let mut x = s;
        for _ in 0..n {
            counts[x % m] += 1;
            x /= m;
        }
        sectors.entry(counts).or_default().push(s);
    }
    sectors.into_values().collect()
}

/// Eigenvalues of the chain Hamiltonian, ascending, diagonalizing one
/// spin-content sector at a time. `cap` bounds the full dimension `m^N`.
pub fn hamiltonian_spectrum(spec: &ChainSpec, cap: usize) -> Result<Vec<f64>> {
    let dim = dense_dim(spec, cap)?;
    let (n, m) = (spec.n(), spec.m());
    let couplings = pair_couplings(spec, &chain_sites(spec, usize::MAX)?);
    let eps = spec.epsilon().sign() as f64;
    let place: Vec<usize> = (0..n).map(|i| m.pow((n - 1 - i) as u32)).collect();
    let diagonal: f64 = couplings.iter().map(|c| c.2).sum();

    let mut index = vec![0usize; dim];
    let mut eig = Vec::with_capacity(dim);
    for states in content_sectors(n, m) {
        let k = states.len();
        for (r, &s) in states.iter().enumerate() {
            index[s] = r;
        }
        let mut block = vec![0.0; k * k];
        for (r, &s) in states.iter().enumerate() {
            block[r * k + r] += diagonal;
            for &(i, j, h) in &couplings {
                block[index[swap_sites(s, i, j, &place, m)] * k + r] -= eps * h;
            }
        }
        eig.extend(symmetric_eigenvalues(&block, k)?);
    }
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub spec: ChainSpec,
    /// Motif energies with multiplicity, ascending.
    pub motif_spectrum: Vec<f64>,
    /// Eigenvalues of the dense Hamiltonian, ascending.
    pub hamiltonian_spectrum: Vec<f64>,
    pub direct_deviation: f64,
    /// Deviation after mapping the Hamiltonian spectrum by `a·E + b` so that
    /// its mean and variance equal the motif spectrum's.
    pub affine_deviation: f64,
    pub affine_scale: f64,
    pub affine_shift: f64,
    pub motif_multiplicities: Vec<usize>,
    pub hamiltonian_multiplicities: Vec<usize>,
    pub multiplicities_match: bool,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Sizes of runs of sorted values whose consecutive gaps are below `tol`.
pub fn multiplicity_pattern(sorted: &[f64], tol: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut run = 0usize;
    for (k, x) in sorted.iter().enumerate() {
        if k > 0 && (x - sorted[k - 1]).abs() > tol {
            out.push(run);
            run = 0;
        }
        run += 1;
    }
    if run > 0 {
        out.push(run);
    }
    out
}

pub fn oracle_compare(spec: &ChainSpec, dense_cap: usize) -> Result<OracleReport> {
    let hamiltonian_spectrum = hamiltonian_spectrum(spec, dense_cap)?;
    let density: DensityTable = density_dp(spec, spec.epsilon().into(), DEFAULT_MEMORY_BUDGET)?;
    let motif_spectrum = density.expand()?;

    let direct_deviation = max_gap(&motif_spectrum, &hamiltonian_spectrum);
    let (mu_m, sd_m) = mean_std(&motif_spectrum);
    let (mu_h, sd_h) = mean_std(&hamiltonian_spectrum);
    let affine_scale = if sd_h > 0.0 { sd_m / sd_h } else { 1.0 };
    let affine_shift = mu_m - affine_scale * mu_h;
    let aligned: Vec<f64> = hamiltonian_spectrum.iter().map(|x| affine_scale * x + affine_shift).collect();
    let affine_deviation = max_gap(&motif_spectrum, &aligned);

    let motif_multiplicities: Vec<usize> =
        density.entries().iter().map(|(_, c)| usize::try_from(c).expect("small table")).collect();
    let spread = aligned.last().unwrap_or(&0.0) - aligned.first().unwrap_or(&0.0);
    let tol = 1e-6 * spread.abs().max(1.0);
    let hamiltonian_multiplicities = multiplicity_pattern(&aligned, tol);
    let multiplicities_match = motif_multiplicities == hamiltonian_multiplicities;

    Ok(OracleReport {
        spec: spec.clone(),
        motif_spectrum,
        hamiltonian_spectrum,
        direct_deviation,
        affine_deviation,
        affine_scale,
        affine_shift,
        motif_multiplicities,
        hamiltonian_multiplicities,
        multiplicities_match,
    })
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `Σ_{i<j} h_ij`, the constant that ferro and antiferro Hamiltonians sum to
/// (halved).
pub fn coupling_sum(spec: &ChainSpec) -> Result<f64> {
    let sites = chain_sites(spec, usize::MAX)?;
    Ok(pair_couplings(spec, &sites).iter().map(|(_, _, h)| h).sum())
}

/// Whether the ferro/antiferro pair for `spec` sums to `2 Σ h_ij · I`.
pub fn epsilon_pair_residual(spec: &ChainSpec, cap: usize) -> Result<f64> {
    let f = build_hamiltonian(&spec.with_epsilon(Epsilon::Ferro), cap)?;
    let af = build_hamiltonian(&spec.with_epsilon(Epsilon::Antiferro), cap)?;
    let c = 2.0 * coupling_sum(spec)?;
    let mut worst = 0.0f64;
    for r in 0..f.dim {
        for col in 0..f.dim {
            let target = if r == col { c } else { 0.0 };
            worst = worst.max((f.get(r, col) + af.get(r, col) - target).abs());
        }
    }
    Ok(worst)
}
