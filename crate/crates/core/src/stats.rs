//! Gaussian unfolding, nearest-neighbour spacing distributions and the
//! Kolmogorov–Smirnov distance between a level density and its Gaussian
//! approximation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::density::DensityTable;
use crate::error::{Error, Result};
use crate::moments::SpectrumStats;

/// `½[1 + erf((E − μ)/(√2 σ))]`.
///
/// `erf` comes from `libm` (the fdlibm/musl rational approximations, accurate
/// to about one ulp). For `E < μ` the lower tail is formed as `½ erfc(·)` so
/// that small probabilities keep their relative precision.
pub fn gaussian_cdf(energy: f64, mu: f64, sigma: f64) -> f64 {
    let z = (energy - mu) / sigma * FRAC_1_SQRT_2;
    if z < 0.0 {
        0.5 * libm::erfc(-z)
    } else {
        0.5 * (1.0 + libm::erf(z))
    }
}

pub fn poisson_spacing(s: f64) -> f64 {
    (-s).exp()
}

pub fn wigner_surmise(s: f64) -> f64 {
    PI * s / 2.0 * (-PI * s * s / 4.0).exp()
}

/// Distinct levels mapped through a smooth cumulative density, ascending.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnfoldedSpectrum {
    eta: Vec<f64>,
}

impl UnfoldedSpectrum {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidSpec("unfolded levels must be nondecreasing".into()));
        }
        Ok(UnfoldedSpectrum { eta })
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }
}

/// Maps each distinct level through [`gaussian_cdf`] with the closed-form
/// `μ`, `σ`.
pub fn unfold(density: &DensityTable, stats: &SpectrumStats) -> Result<UnfoldedSpectrum> {
    if density.len() < 3 {
        return Err(Error::TooFewLevels { need: 3, got: density.len() });
    }
    if !(stats.sigma > 0.0) {
        return Err(Error::NonPositiveSigma(stats.sigma));
    }
    let mu = stats.mu_f64();
    let eta = density
        .entries()
        .iter()
        .map(|(e, _)| gaussian_cdf(density.energy_f64(*e), mu, stats.sigma))
        .collect();
    UnfoldedSpectrum::new(eta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacingBins {
    pub count: usize,
    /// Right edge of the last bin; widened to the largest spacing if smaller.
    pub upper: f64,
}

impl Default for SpacingBins {
    fn default() -> Self {
        SpacingBins { count: 40, upper: 4.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpacingHistogram {
    /// Normalized spacings `s_i`, mean exactly 1 up to rounding.
    pub spacings: Vec<f64>,
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    /// Normalized bin heights; `Σ density · width = 1`.
    pub density: Vec<f64>,
    pub poisson: Vec<f64>,
    pub wigner: Vec<f64>,
}

impl SpacingHistogram {
    pub fn mean_spacing(&self) -> f64 {
        self.spacings.iter().sum::<f64>() / self.spacings.len() as f64
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().zip(self.edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum()
    }
}

/// `s_i = (η_{i+1} − η_i)/Δ` with `Δ = (η_L − η_1)/(L − 1)`, binned on
/// `[0, upper]`.
pub fn spacing_distribution(unfolded: &UnfoldedSpectrum, bins: SpacingBins) -> Result<SpacingHistogram> {
    let eta = unfolded.eta();
    if eta.len() < 2 {
        return Err(Error::TooFewLevels { need: 2, got: eta.len() });
    }
    if bins.count == 0 {
        return Err(Error::InvalidSpec("spacing histogram needs at least one bin".into()));
    }
    let span = eta[eta.len() - 1] - eta[0];
    if !(span > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    let levels = eta.len() as f64;
    let spacings: Vec<f64> = eta.windows(2).map(|w| (w[1] - w[0]) * (levels - 1.0) / span).collect();

    let largest = spacings.iter().cloned().fold(0.0, f64::max);
    let upper = if bins.upper > 0.0 { bins.upper.max(largest) } else { largest.max(1.0) };
    let width = upper / bins.count as f64;
    let mut counts = vec![0usize; bins.count];
    for &s in &spacings {
        let idx = ((s / width) as usize).min(bins.count - 1);
        counts[idx] += 1;
    }
    let edges: Vec<f64> = (0..=bins.count).map(|k| k as f64 * width).collect();
    let centers: Vec<f64> = (0..bins.count).map(|k| (k as f64 + 0.5) * width).collect();
    let total = spacings.len() as f64;
    Ok(SpacingHistogram {
        density: counts.iter().map(|&c| c as f64 / (total * width)).collect(),
        poisson: centers.iter().map(|&s| poisson_spacing(s)).collect(),
        wigner: centers.iter().map(|&s| wigner_surmise(s)).collect(),
        spacings,
        edges,
        centers,
    })
}

/// `sup |F_emp − Φ|` over the distinct levels, with the degeneracy-weighted
/// empirical CDF taken on both sides of each jump.
pub fn ks_distance(density: &DensityTable, stats: &SpectrumStats) -> Result<f64> {
    if density.is_empty() {
        return Err(Error::EmptyDensity);
    }
    let mu = stats.mu_f64();
    let mut below = 0.0f64;
    let mut worst = 0.0f64;
    for (energy, p) in density.probabilities() {
        let phi = if stats.sigma > 0.0 {
            gaussian_cdf(energy, mu, stats.sigma)
        } else if energy < mu {
            0.0
        } else if energy > mu {
            1.0
        } else {
            0.5
        };
        let above = (below + p).min(1.0);
        worst = worst.max((below - phi).abs()).max((above - phi).abs());
        below = above;
    }
    Ok(worst)
}
