//! The `m×m` Toeplitz transfer matrix `T(ω)`, its closed-form unitary
//! diagonalization, and the normalized characteristic function of the level
//! density evaluated two ways: exactly, as an ordered product of transfer
//! matrices, and through the leading asymptotic term `e^{−iμt/σ} Λ_m(t)`.
//!
//! Unimodular `ω = e^{iθ}` is handled through its phase so that powers
//! `ω^p e^{2πikp/m}` are formed from reduced angles rather than repeated
//! complex multiplication.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{dispersion, gamma_values, ChainSpec, Epsilon};
use crate::error::{Error, Result};
use crate::moments::{closed_form_moments, gamma_sum_check, SpectrumStats};
use crate::motif::DeltaRule;

/// Tolerance on `||ω| − 1|` accepted by the unitary routines.
pub const UNIMODULAR_TOL: f64 = 1e-12;

/// Below this `|e^{ix} − 1|` the quotient form of `λ_m` is replaced by the sum.

type CMatrix = Vec<Complex64>;

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidSpec(format!("transfer matrix needs m >= 2, got {m}")));
    }
    Ok(())
}

fn unimodular_phase(omega: Complex64) -> Result<f64> {
    let r = omega.norm();
    if !((r - 1.0).abs() <= UNIMODULAR_TOL) {
        return Err(Error::NotUnimodular(r));
    }
    Ok(omega.arg())
}

/// `[ω e^{2πik/m}]^p` for `ω = e^{iθ}`.
fn twisted_power(theta: f64, k: usize, p: usize, m: usize) -> Complex64 {
    let root = 2.0 * PI * ((k * p) % m) as f64 / m as f64;
    Complex64::cis(p as f64 * theta + root)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    omega: Complex64,
    m: usize,
    entries: CMatrix,
}

impl TransferMatrix {
    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Entry `(k, l)`, 1-based.
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.entries[(k - 1) * self.m + (l - 1)]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

/// `[T(ω)]_{kl} = ω^{m δ(k,l)} / m` under the ferro rule: `1/m` on and below
/// the diagonal, `ω^m/m` strictly above it.
pub fn transfer_matrix(omega: Complex64, m: usize) -> Result<TransferMatrix> {
    check_m(m)?;
    let upper = omega.powu(m as u32) / m as f64;
    let lower = Complex64::new(1.0 / m as f64, 0.0);
    let entries = (0..m * m)
        .map(|idx| if idx / m < idx % m { upper } else { lower })
        .collect();
    Ok(TransferMatrix { omega, m, entries })
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    omega: Complex64,
    m: usize,
    eigenvalues: Vec<Complex64>,
    u: CMatrix,
}

impl SpectralDecomposition {
    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    /// `λ_1, …, λ_m`.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// `U_{nn′}`, 1-based.
    pub fn u(&self, n: usize, n_prime: usize) -> Complex64 {
        self.u[(n - 1) * self.m + (n_prime - 1)]
    }

    pub fn u_matrix(&self) -> &[Complex64] {
        &self.u
    }

    /// `U D U†`, row-major.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let m = self.m;
        let mut out = vec![Complex64::zero(); m * m];
        for r in 0..m {
            for c in 0..m {
                out[r * m + c] = (0..m)
                    .map(|k| self.u[r * m + k] * self.eigenvalues[k] * self.u[c * m + k].conj())
                    .sum();
            }
        }
        out
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = mul_adjoint_left(&self.u, &self.u, self.m);
        max_deviation_from_identity(&prod, self.m)
    }
}

/// Closed-form eigenpairs of `T(ω)` for unimodular `ω`: no iterative solver.
pub fn eigen_decompose(omega: Complex64, m: usize) -> Result<SpectralDecomposition> {
    check_m(m)?;
    let theta = unimodular_phase(omega)?;
    let eigenvalues = (1..=m).map(|k| eigenvalue(theta, k, m)).collect();
    Ok(SpectralDecomposition { omega, m, eigenvalues, u: unitary_u(theta, m) })
}

/// `λ_k(e^{iθ}) = (1/m) Σ_{l<m} [e^{iθ} e^{2πik/m}]^l`.
pub fn eigenvalue(theta: f64, k: usize, m: usize) -> Complex64 {
    (0..m).map(|l| twisted_power(theta, k, l, m)).sum::<Complex64>() / m as f64
}

/// `U_{nn′}(e^{iθ}) = m^{−1/2} [e^{iθ} e^{2πin′/m}]^{m−n}`.
fn unitary_u(theta: f64, m: usize) -> CMatrix {
    let norm = 1.0 / (m as f64).sqrt();
    let mut u = vec![Complex64::zero(); m * m];
    for n in 1..=m {
        for np in 1..=m {
            u[(n - 1) * m + (np - 1)] = twisted_power(theta, np, m - n, m) * norm;
        }
    }
    u
}

/// `A† B` for row-major `m×m` matrices.
fn mul_adjoint_left(a: &[Complex64], b: &[Complex64], m: usize) -> CMatrix {
    let mut out = vec![Complex64::zero(); m * m];
    for r in 0..m {
        for c in 0..m {
            out[r * m + c] = (0..m).map(|k| a[k * m + r].conj() * b[k * m + c]).sum();
        }
    }
    out
}

/// Entrywise `max |A − I|` of a row-major `m×m` matrix.
pub fn max_deviation_from_identity(a: &[Complex64], m: usize) -> f64 {
    (0..m * m)
        .map(|idx| {
            let id = if idx / m == idx % m { 1.0 } else { 0.0 };
            (a[idx] - id).norm()
        })
        .fold(0.0, f64::max)
}

/// Per `k`: `|Σ_{n,n′} U_{kn} conj(U_{kn′}) − m δ_{km}|`, with `k` fixing the
/// exponent `m − k`. This placement makes the identity exact for every
/// unimodular `ω`; at `ω = 1`, where it is applied, `U` is symmetric and the
/// sum coincides with the one over column `k`. Off `ω = 1` the column sum is
/// `m |λ_k(ω)|²` instead, see [`u_column_sums`].
pub fn u_column_sum_check(omega: Complex64, m: usize) -> Result<Vec<f64>> {
    check_m(m)?;
    let theta = unimodular_phase(omega)?;
    let u = unitary_u(theta, m);
    Ok((0..m)
        .map(|k| {
            let row: Complex64 = (0..m).map(|n| u[k * m + n]).sum();
            let target = if k + 1 == m { m as f64 } else { 0.0 };
            (row.norm_sqr() - target).abs()
        })
        .collect())
}

/// `|Σ_n U_{nk}|²` per column `k`.
pub fn u_column_sums(omega: Complex64, m: usize) -> Result<Vec<f64>> {
    check_m(m)?;
    let theta = unimodular_phase(omega)?;
    let u = unitary_u(theta, m);
    Ok((0..m).map(|k| (0..m).map(|n| u[n * m + k]).sum::<Complex64>().norm_sqr()).collect())
}

/// `B = U†(e^{iθ_1}) U(e^{iθ_2})`, row-major.
pub fn b_matrix(theta_1: f64, theta_2: f64, m: usize) -> Vec<Complex64> {
    mul_adjoint_left(&unitary_u(theta_1, m), &unitary_u(theta_2, m), m)
}

/// `λ_m(e^{ix}) = (e^{imx} − 1) / (m(e^{ix} − 1))`, evaluated as
/// `e^{i(m−1)x/2} sin(mx/2) / (m sin(x/2))` after reducing `x` to `[−π, π]`.
/// This form has no cancellation near `x ∈ 2πℤ`.
pub fn lambda_m(x: f64, m: usize) -> Complex64 {
    let x = x - TAU * (x / TAU).round();
    let half = x / 2.0;
    let mf = m as f64;
    if half == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::cis((mf - 1.0) * half) * ((mf * half).sin() / (mf * half.sin()))
}

/// `t_k = t_max (2k − (P−1)) / (P−1)`, exactly symmetric about zero.
pub fn symmetric_t_grid(t_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => {
            let half = (points - 1) as f64;
            (0..points).map(|k| t_max * (2.0 * k as f64 - half) / half).collect()
        }
    }
}

pub const DEFAULT_T_MAX: f64 = 6.0;
pub const DEFAULT_T_POINTS: usize = 241;

/// `φ̂(t) = e^{−iμt/σ} (1/m) Σ_{nn′} [T_1 ⋯ T_{N−1}]_{nn′}` with
/// `[T_j]_{kl} = e^{i t δ(k,l) F(j)/σ} / m`, accumulated as a row vector.
pub fn charfn_exact(spec: &ChainSpec, stats: &SpectrumStats, t_grid: &[f64]) -> Vec<Complex64> {
    let rule = DeltaRule::from(spec.epsilon());
    let m = spec.m();
    let sigma = stats.sigma;
    let phases: Vec<f64> = dispersion(spec).values_f64().iter().map(|f| f / sigma).collect();
    let shift = stats.mu_f64() / sigma;
    let excited: Vec<bool> = (0..m * m).map(|idx| rule.excited(idx / m + 1, idx % m + 1)).collect();
    let inv_m = 1.0 / m as f64;

    t_grid
        .par_iter()
        .map(|&t| {
            let mut v = vec![Complex64::new(1.0, 0.0); m];
            let mut next = vec![Complex64::zero(); m];
            for &phase in &phases {
                let w = Complex64::cis(t * phase);
                for (l, out) in next.iter_mut().enumerate() {
                    let mut plain = Complex64::zero();
                    let mut twisted = Complex64::zero();
                    for (k, vk) in v.iter().enumerate() {
                        if excited[k * m + l] {
                            twisted += vk;
                        } else {
                            plain += vk;
                        }
                    }
                    *out = (plain + twisted * w) * inv_m;
                }
                std::mem::swap(&mut v, &mut next);
            }
            Complex64::cis(-shift * t) * v.iter().sum::<Complex64>() * inv_m
        })
        .collect()
}

/// `e^{−iμt/σ} Π_j λ_m(e^{iγ_j t})` for the ferro chain; the antiferro
/// spectrum is the ferro one reflected, so its estimate is the conjugate.
pub fn charfn_asymptotic(spec: &ChainSpec, stats: &SpectrumStats, t_grid: &[f64]) -> Vec<Complex64> {
    let m = spec.m();
    let sigma = stats.sigma;
    let mu = stats.mu_f64();
    let mu_ferro = match spec.epsilon() {
        Epsilon::Ferro => mu,
        Epsilon::Antiferro => dispersion(spec).sum().to_f64().unwrap_or(f64::NAN) - mu,
    };
    let gammas = gamma_values(spec, sigma).unwrap_or_default();
    t_grid
        .par_iter()
        .map(|&t| {
            let product: Complex64 = gammas.iter().map(|g| lambda_m(g * t, m)).product();
            let value = Complex64::cis(-mu_ferro * t / sigma) * product;
            match spec.epsilon() {
                Epsilon::Ferro => value,
                Epsilon::Antiferro => value.conj(),
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CharFnSeries {
    pub t: Vec<f64>,
    pub exact: Vec<Complex64>,
    pub asymptotic: Vec<Complex64>,
    pub gaussian: Vec<f64>,
}

impl CharFnSeries {
    pub fn max_gaussian_deviation(&self) -> f64 {
        self.exact.iter().zip(&self.gaussian).map(|(e, g)| (e - g).norm()).fold(0.0, f64::max)
    }

    pub fn max_asymptotic_deviation(&self) -> f64 {
        self.exact.iter().zip(&self.asymptotic).map(|(e, a)| (e - a).norm()).fold(0.0, f64::max)
    }
}

pub fn charfn_series(spec: &ChainSpec, t_grid: &[f64]) -> CharFnSeries {
    let stats = closed_form_moments(spec);
    CharFnSeries {
        t: t_grid.to_vec(),
        exact: charfn_exact(spec, &stats, t_grid),
        asymptotic: charfn_asymptotic(spec, &stats, t_grid),
        gaussian: t_grid.iter().map(|t| (-t * t / 2.0).exp()).collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `max_t |φ̂(t) − e^{−t²/2}|`
    pub d: f64,
    /// `max_t |φ̂(t) − e^{−iμt/σ}Λ_m(t)|`
    pub d_asym: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub slope_d: f64,
    pub slope_d_asym: f64,
}

/// Sup-norm deviations over `t_grid` for every `N` in the sweep, with
/// least-squares log-log slopes. `template` fixes family, `m`, `ε` and `α`.
pub fn convergence_report(template: &ChainSpec, n_sweep: &[usize], t_grid: &[f64]) -> Result<ConvergenceReport> {
    let rows = n_sweep
        .iter()
        .map(|&n| {
            let spec = template.with_n(n)?;
            let series = charfn_series(&spec, t_grid);
            Ok(ConvergenceRow { n, d: series.max_gaussian_deviation(), d_asym: series.max_asymptotic_deviation() })
        })
        .collect::<Result<Vec<_>>>()?;
    let log_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let slope = |ys: Vec<f64>| least_squares_slope(&log_n, &ys.iter().map(|y| y.ln()).collect::<Vec<_>>());
    Ok(ConvergenceReport {
        slope_d: slope(rows.iter().map(|r| r.d).collect()),
        slope_d_asym: slope(rows.iter().map(|r| r.d_asym).collect()),
        rows,
    })
}

/// Ordinary least-squares slope; NaN with fewer than two points.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Scaled size of the quantities the large-`N` argument relies on.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticDiagnostics {
    pub n: usize,
    /// `max_j γ_j · √N`
    pub gamma_max: f64,
    /// `max_j |γ_j − γ_{j+1}| · N^{3/2}`
    pub gamma_step: f64,
    /// `max_j ‖B_j(t) − I‖_max · N^{3/2}`
    pub b_deviation: f64,
    /// `|(1/12)(m²−1) Σ γ_j² − 1| · N`
    pub gamma_sum: f64,
}

pub fn asymptotic_diagnostics(spec: &ChainSpec, t: f64) -> AsymptoticDiagnostics {
    let stats = closed_form_moments(spec);
    let gammas = gamma_values(spec, stats.sigma).unwrap_or_default();
    let n = spec.n() as f64;
    let m = spec.m();
    let gamma_max = gammas.iter().cloned().fold(0.0, f64::max);
    let gamma_step = gammas.windows(2).map(|w| (w[0] - w[1]).abs()).fold(0.0, f64::max);
    let b_dev = gammas
        .windows(2)
        .map(|w| max_deviation_from_identity(&b_matrix(w[0] * t, w[1] * t, m), m))
        .fold(0.0, f64::max);
    AsymptoticDiagnostics {
        n: spec.n(),
        gamma_max: gamma_max * n.sqrt(),
        gamma_step: gamma_step * n.powf(1.5),
        b_deviation: b_dev * n.powf(1.5),
        gamma_sum: gamma_sum_check(spec) * n,
    }
}

/// Max entrywise `|A − B|` of two row-major matrices.
pub fn max_abs_difference(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
