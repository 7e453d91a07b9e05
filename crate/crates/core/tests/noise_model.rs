use noisr_core::noise::{apply_noise, log_likelihood, residual_histogram, Histogram};
use noisr_core::train::{loss, LossBreakdown};
use noisr_core::{ImageGrid, NoiseSpec};

#[test]
fn gaussian_residuals_have_the_requested_moments() {
    let g = ImageGrid::filled(1000, 1000, 0.5).unwrap();
    let spec = NoiseSpec::gaussian(0.0, 0.02).unwrap();
    let n = apply_noise(&g, &spec, 2024);
    let r: Vec<f64> = n.data().iter().map(|v| v - 0.5).collect();
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let std = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r.len() - 1) as f64).sqrt();
    assert!(mean.abs() <= 1e-4, "mean {mean}");
    assert!((0.0199..=0.0201).contains(&std), "std {std}");
}

#[test]
fn speckle_scales_with_intensity() {
    let g = ImageGrid::from_fn(400, 400, |r, _| if r < 200 { 0.2 } else { 0.6 }).unwrap();
    let n = apply_noise(&g, &NoiseSpec::speckle(0.05).unwrap(), 1);
    let std_of = |rows: std::ops::Range<usize>, level: f64| {
        let v: Vec<f64> = rows.flat_map(|r| (0..400).map(move |c| (r, c))).map(|(r, c)| n.get(r, c) - level).collect();
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    };
    assert!((std_of(0..200, 0.2) / (0.2 * 0.05) - 1.0).abs() < 0.02);
    assert!((std_of(200..400, 0.6) / (0.6 * 0.05) - 1.0).abs() < 0.02);
}

#[test]
fn a_fixed_seed_reproduces_every_bit() {
    let g = ImageGrid::from_fn(64, 48, |r, c| (r + c) as f64 / 120.0).unwrap();
    let spec = NoiseSpec::gaussian(0.0, 0.02).unwrap();
    let a = apply_noise(&g, &spec, 77);
    let b = apply_noise(&g, &spec, 77);
    assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_ne!(apply_noise(&g, &spec, 78), a);
}

#[test]
fn zero_residual_likelihood_is_the_peak_density() {
    let z = ImageGrid::filled(16, 16, 0.0).unwrap();
    let g = ImageGrid::filled(16, 16, 0.5).unwrap();
    let ll = log_likelihood(&z, &g, &NoiseSpec::gaussian(0.0, 0.02).unwrap()).unwrap();
    let want = -(0.02 * (2.0 * std::f64::consts::PI).sqrt()).ln();
    assert!((ll - 2.9932).abs() <= 1e-3);
    assert!((ll - want).abs() <= 1e-12);
}

#[test]
fn loss_is_fit_plus_weighted_likelihood() {
    let g = ImageGrid::from_fn(12, 12, |r, c| 0.3 + 0.03 * (r as f64) - 0.01 * c as f64).unwrap();
    let spec = NoiseSpec::gaussian(0.0, 0.02).unwrap();
    let n = apply_noise(&g, &spec, 3);
    let p = g.map(|v| v + 0.01).unwrap();
    let lb = loss(&p, &n, &g, &spec, -10.0).unwrap();
    assert!((lb.total - (lb.fit_term - 10.0 * lb.noise_term)).abs() <= 1e-9);
    assert_eq!(LossBreakdown::compose(lb.fit_term, lb.noise_term, -10.0), lb);
}

#[test]
fn histogram_counts_every_residual() {
    let g = ImageGrid::filled(32, 32, 0.5).unwrap();
    let n = apply_noise(&g, &NoiseSpec::gaussian(0.0, 0.02).unwrap(), 9);
    let h = residual_histogram(&n, &g, 101, 0.02).unwrap();
    assert_eq!(h.total(), 1024);
    let s = Histogram::symmetric(&[0.0, 0.1, -0.1], 0.1, 5).unwrap();
    assert_eq!(s.total(), 3);
}
