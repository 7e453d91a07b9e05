//! Synthetic noise, residual log-likelihood under a known noise
//! distribution, and residual histograms.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// Floor on the reference intensity used for the speckle density, so the
/// per-pixel standard deviation never collapses to zero.
pub const SPECKLE_EPS: f64 = 1e-3;

/// Default bin count of residual histograms.
pub const DEFAULT_BINS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    /// Additive: `N = G + eta`.
    Gaussian,
    /// Multiplicative: `N = G + G * eta`.
    Speckle,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Speckle => "speckle",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(NoiseKind::Gaussian),
            "speckle" => Ok(NoiseKind::Speckle),
            other => Err(Error::InvalidArgument(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// The known noise distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    kind: NoiseKind,
    mu: f64,
    sigma: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise needs finite mu and sigma > 0, got mu={mu} sigma={sigma}"
            )));
        }
        let mu = match kind {
            NoiseKind::Gaussian => mu,
            NoiseKind::Speckle => 0.0,
        };
        Ok(Self { kind, mu, sigma })
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::Gaussian, mu, sigma)
    }

    pub fn speckle(sigma: f64) -> Result<Self> {
        Self::new(NoiseKind::Speckle, 0.0, sigma)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Adds seeded noise to `g` and clips the result to `[0, 1]`.
///
/// Each row draws from its own ChaCha stream keyed by the row index, so the
/// output does not depend on how rows are scheduled across threads.
pub fn apply_noise(g: &ImageGrid, spec: &NoiseSpec, seed: u64) -> ImageGrid {
    let width = g.width();
    let normal = Normal::new(spec.mu(), spec.sigma()).expect("sigma validated at construction");
    let mut data = vec![0.0; g.len()];
    data.par_chunks_mut(width)
        .zip(g.data().par_chunks(width))
        .enumerate()
        .for_each(|(row, (out, src))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(row as u64);
            for (o, &v) in out.iter_mut().zip(src) {
                let eta = normal.sample(&mut rng);
                let noisy = match spec.kind() {
                    NoiseKind::Gaussian => v + eta,
                    NoiseKind::Speckle => v + v * eta,
                };
                *o = noisy.clamp(0.0, 1.0);
            }
        });
    ImageGrid::new(g.height(), g.width(), data).expect("noise keeps intensities finite")
}

#[inline]
fn pixel_sigma(spec: &NoiseSpec, reference: f64) -> f64 {
    match spec.kind() {
        NoiseKind::Gaussian => spec.sigma(),
        NoiseKind::Speckle => spec.sigma() * reference.max(SPECKLE_EPS),
    }
}

/// Mean log-density of `residual` under the noise distribution. For speckle
/// noise the per-pixel standard deviation is `sigma * max(reference, 1e-3)`.
pub fn log_likelihood(residual: &ImageGrid, reference: &ImageGrid, spec: &NoiseSpec) -> Result<f64> {
    residual.check_same_dims(reference)?;
    Ok(log_likelihood_slices(residual.data(), reference.data(), spec, None))
}

/// Mean log-likelihood over slices; when `grad` is given it receives the
/// derivative with respect to each residual entry.
pub(crate) fn log_likelihood_slices(
    residual: &[f64],
    reference: &[f64],
    spec: &NoiseSpec,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let m = residual.len() as f64;
    let half_log_2pi = 0.5 * (2.0 * PI).ln();
    let mut total = 0.0;
    for (i, (&r, &g)) in residual.iter().zip(reference).enumerate() {
        let s = pixel_sigma(spec, g);
        let z = (r - spec.mu()) / s;
        total += -s.ln() - half_log_2pi - 0.5 * z * z;
        if let Some(grad) = grad.as_deref_mut() {
            grad[i] = -z / (s * m);
        }
    }
    total / m
}

/// Fixed-range histogram with summary statistics of the binned samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub sample_mean: f64,
    pub sample_std: f64,
}

impl Histogram {
    /// Bins `samples` over `[-half_range, half_range]`; the last bin is closed.
    pub fn symmetric(samples: &[f64], half_range: f64, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidArgument("histogram needs at least 2 bins".into()));
        }
        if !(half_range > 0.0) || !half_range.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "histogram range must be positive, got {half_range}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Empty("no samples to histogram".into()));
        }
        let lo = -half_range;
        let width = 2.0 * half_range / bins as f64;
        let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &s in samples {
            let idx = ((s - lo) / width).floor();
            let idx = if idx < 0.0 { 0 } else { (idx as usize).min(bins - 1) };
            counts[idx] += 1;
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
        Ok(Self {
            bin_edges,
            counts,
            sample_mean: mean,
            sample_std: var.sqrt(),
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_of(&self, value: f64) -> usize {
        let lo = self.bin_edges[0];
        let width = self.bin_edges[1] - lo;
        let idx = ((value - lo) / width).floor();
        if idx < 0.0 {
            0
        } else {
            (idx as usize).min(self.counts.len() - 1)
        }
    }

    /// `bin_left,bin_right,count` rows with a trailing summary comment.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.bin_edges[i], self.bin_edges[i + 1], c);
        }
        let _ = writeln!(
            out,
            "# mean={} std={} n={}",
            self.sample_mean,
            self.sample_std,
            self.total()
        );
        out
    }
}

/// Half-width of the residual histogram range: `max(4 sigma, max |r|)`.
pub fn residual_range(residuals: &[f64], sigma: f64) -> f64 {
    residuals.iter().fold(4.0 * sigma, |acc, r| acc.max(r.abs()))
}

/// Histogram of `p - g` over a symmetric range sized from `sigma` and the data.
pub fn residual_histogram(p: &ImageGrid, g: &ImageGrid, bins: usize, sigma: f64) -> Result<Histogram> {
    p.check_same_dims(g)?;
    let residuals: Vec<f64> = p.data().iter().zip(g.data()).map(|(a, b)| a - b).collect();
    Histogram::symmetric(&residuals, residual_range(&residuals, sigma), bins)
}
