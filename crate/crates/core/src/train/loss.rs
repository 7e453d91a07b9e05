use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::noise::{log_likelihood_slices, NoiseSpec};

/// How the prediction-to-target distance is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMode {
    /// `|P - N|_F / sqrt(m)`
    #[default]
    Rms,
    /// `|P - N|_F`
    Frobenius,
    /// `|P - N|_F^2 / m`
    Mse,
}

impl fmt::Display for FitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMode::Rms => "rms",
            FitMode::Frobenius => "frobenius",
            FitMode::Mse => "mse",
        })
    }
}

impl FromStr for FitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rms" => Ok(FitMode::Rms),
            "frobenius" => Ok(FitMode::Frobenius),
            "mse" => Ok(FitMode::Mse),
            other => Err(Error::InvalidArgument(format!("unknown fit mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub fit_term: f64,
    /// Mean log-likelihood of `P - G`; larger is better.
    pub noise_term: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn compose(fit_term: f64, noise_term: f64, lambda: f64) -> Self {
        Self { fit_term, noise_term, total: fit_term + lambda * noise_term }
    }

    pub fn is_finite(&self) -> bool {
        self.fit_term.is_finite() && self.noise_term.is_finite() && self.total.is_finite()
    }
}

/// Training objective `fit(P, N) + lambda * loglik(P - G)` with the RMS fit.
pub fn loss(p: &ImageGrid, n: &ImageGrid, g: &ImageGrid, spec: &NoiseSpec, lambda: f64) -> Result<LossBreakdown> {
    loss_with(p, n, g, spec, lambda, FitMode::Rms)
}

pub fn loss_with(
    p: &ImageGrid,
    n: &ImageGrid,
    g: &ImageGrid,
    spec: &NoiseSpec,
    lambda: f64,
    mode: FitMode,
) -> Result<LossBreakdown> {
    p.check_same_dims(n)?;
    p.check_same_dims(g)?;
    Ok(loss_slices(p.data(), n.data(), g.data(), spec, lambda, mode, None))
}

/// Loss and its gradient with respect to every entry of `p`.
pub fn loss_and_gradient(
    p: &[f64],
    n: &[f64],
    g: &[f64],
    spec: &NoiseSpec,
    lambda: f64,
    mode: FitMode,
) -> Result<(LossBreakdown, Vec<f64>)> {
    if p.len() != n.len() || p.len() != g.len() {
        return Err(Error::InvalidArgument(format!(
            "loss inputs have {}, {} and {} entries",
            p.len(),
            n.len(),
            g.len()
        )));
    }
    let mut grad = vec![0.0; p.len()];
    let lb = loss_slices(p, n, g, spec, lambda, mode, Some(&mut grad));
    Ok((lb, grad))
}

fn loss_slices(
    p: &[f64],
    n: &[f64],
    g: &[f64],
    spec: &NoiseSpec,
    lambda: f64,
    mode: FitMode,
    grad: Option<&mut [f64]>,
) -> LossBreakdown {
    let m = p.len() as f64;
    let sq: f64 = p.iter().zip(n).map(|(a, b)| (a - b) * (a - b)).sum();
    let frob = sq.sqrt();
    let fit = match mode {
        FitMode::Rms => frob / m.sqrt(),
        FitMode::Frobenius => frob,
        FitMode::Mse => sq / m,
    };
    let residual: Vec<f64> = p.iter().zip(g).map(|(a, b)| a - b).collect();
    let Some(grad) = grad else {
        let noise = log_likelihood_slices(&residual, g, spec, None);
        return LossBreakdown::compose(fit, noise, lambda);
    };
    let noise = log_likelihood_slices(&residual, g, spec, Some(grad));
    // d fit / d P, zero at an exact fit where the norm is not differentiable
    let scale = match mode {
        FitMode::Rms if frob > 0.0 => 1.0 / (frob * m.sqrt()),
        FitMode::Frobenius if frob > 0.0 => 1.0 / frob,
        FitMode::Mse => 2.0 / m,
        _ => 0.0,
    };
    for ((d, a), b) in grad.iter_mut().zip(p).zip(n) {
        *d = lambda * *d + scale * (a - b);
    }
    LossBreakdown::compose(fit, noise, lambda)
}
