//! Shared setups for the network and training tests.

#![allow(dead_code)]

use noisr_core::image::ImageGrid;
use noisr_core::net::{backward, forward_raw, init, ParameterSet};
use noisr_core::train::{loss_and_gradient, FitMode};
use noisr_core::{NetworkConfig, NoiseSpec, NormalizationStats, SamplingFactor};

pub fn tiny_config(seed: u64) -> NetworkConfig {
    let mut cfg = NetworkConfig::for_factor(SamplingFactor::X2);
    cfg.width = 3;
    cfg.skip_width = 3;
    cfg.num_blocks = 1;
    cfg.seed = seed;
    cfg
}

/// Low-res input, ground truth and noisy target for an 8x8 -> 16x16 problem.
pub fn tiny_problem() -> (ImageGrid, ImageGrid, ImageGrid) {
    let g = ImageGrid::from_fn(16, 16, |r, c| 0.5 + 0.25 * (r as f64 * 0.5).sin() * (c as f64 * 0.35).cos()).unwrap();
    let n = noisr_core::noise::apply_noise(&g, &NoiseSpec::gaussian(0.0, 0.02).unwrap(), 5);
    let l = noisr_core::resample::decimate(&n, SamplingFactor::X2).unwrap();
    (l, g, n)
}

pub fn total_loss(params: &ParameterSet<f64>, stats: &NormalizationStats, l: &ImageGrid, g: &ImageGrid, n: &ImageGrid, lambda: f64) -> f64 {
    let acts = forward_raw(params, stats, l).unwrap();
    let spec = NoiseSpec::gaussian(0.0, 0.02).unwrap();
    loss_and_gradient(acts.output(), n.data(), g.data(), &spec, lambda, FitMode::Rms).unwrap().0.total
}

/// Largest relative gap between analytic and central-difference gradients of
/// the full objective, over every parameter with `|grad| > 1e-6`, and how
/// many parameters were compared.
pub fn gradient_check(lambda: f64, step: f64) -> (f64, usize, usize) {
    let cfg = tiny_config(3);
    let stats = NormalizationStats::new(0.5, 0.2).unwrap();
    let (l, g, n) = tiny_problem();
    let mut params = init::<f64>(&cfg).unwrap();
    let spec = NoiseSpec::gaussian(0.0, 0.02).unwrap();
    let acts = forward_raw(&params, &stats, &l).unwrap();
    let (_, dp) = loss_and_gradient(acts.output(), n.data(), g.data(), &spec, lambda, FitMode::Rms).unwrap();
    let grad = backward(&params, &acts, &dp);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for i in 0..params.len() {
        let orig = params.data()[i];
        params.data_mut()[i] = orig + step;
        let up = total_loss(&params, &stats, &l, &g, &n, lambda);
        params.data_mut()[i] = orig - step;
        let down = total_loss(&params, &stats, &l, &g, &n, lambda);
        params.data_mut()[i] = orig;
        let fd = (up - down) / (2.0 * step);
        if grad[i].abs() > 1e-6 {
            worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()));
            checked += 1;
        }
    }
    (worst, checked, params.len())
}
