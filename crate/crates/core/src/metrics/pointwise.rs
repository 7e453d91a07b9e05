//! Global, pixel-population metrics: MSE, NRMSE, NCC, PSNR and UIQ.

use super::to_255;
use crate::error::Result;
use crate::image::ImageGrid;

/// Mean squared error on the 8-bit scale.
pub fn mse(n: &ImageGrid, p: &ImageGrid) -> Result<f64> {
    let (a, b) = to_255(n, p)?;
    Ok(mse_255(&a, &b))
}

pub(crate) fn mse_255(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// `sqrt(sum (N - P)^2 / sum N^2)`, anchored on the reference `n`. An all-zero
/// reference yields `+inf` unless the candidate is identical.
pub fn nrmse(n: &ImageGrid, p: &ImageGrid) -> Result<f64> {
    let (a, b) = to_255(n, p)?;
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    Ok(if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        (num / den).sqrt()
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population moments `(mean_a, mean_b, var_a, var_b, cov)`.
fn moments(a: &[f64], b: &[f64]) -> (f64, f64, f64, f64, f64) {
    let (ma, mb) = (mean(a), mean(b));
    let mut va = 0.0;
    let mut vb = 0.0;
    let mut cov = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        va += dx * dx;
        vb += dy * dy;
        cov += dx * dy;
    }
    let m = a.len() as f64;
    (ma, mb, va / m, vb / m, cov / m)
}

/// Normalized cross-correlation, i.e. the Pearson correlation of the two pixel
/// populations. When either image is constant the correlation is undefined;
/// identical images then score 1 and anything else 0.
pub fn ncc(n: &ImageGrid, p: &ImageGrid) -> Result<f64> {
    let (a, b) = to_255(n, p)?;
    let (_, _, va, vb, cov) = moments(&a, &b);
    if va == 0.0 || vb == 0.0 {
        return Ok(if a == b { 1.0 } else { 0.0 });
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Peak signal-to-noise ratio in dB with the reference maximum as peak.
/// Identical images give `+inf`.
pub fn psnr(n: &ImageGrid, p: &ImageGrid) -> Result<f64> {
    let (a, b) = to_255(n, p)?;
    let peak = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(psnr_from(peak, mse_255(&a, &b)))
}

pub(crate) fn psnr_from(peak: f64, mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Quality index from first and second moments, with the degenerate-case
/// rules of the reference UIQ implementation.
pub(crate) fn uiq_from_moments(ma: f64, mb: f64, va: f64, vb: f64, cov: f64) -> f64 {
    let den_var = va + vb;
    let den_mean = ma * ma + mb * mb;
    match (den_var == 0.0, den_mean == 0.0) {
        (true, true) => 1.0,
        (true, false) => 2.0 * ma * mb / den_mean,
        (false, true) => 2.0 * cov / den_var,
        // factored so that identical inputs give exactly 1
        (false, false) => (2.0 * cov / den_var) * (2.0 * ma * mb / den_mean),
    }
}

/// Universal image quality index evaluated once over the whole image.
pub fn uiq(n: &ImageGrid, p: &ImageGrid) -> Result<f64> {
    let (a, b) = to_255(n, p)?;
    let (ma, mb, va, vb, cov) = moments(&a, &b);
    Ok(uiq_from_moments(ma, mb, va, vb, cov))
}

/// UIQ over sliding `block x block` windows (stride 1), mean-pooled. Falls
/// back to the global index when the image is smaller than the window.
pub fn uiq_windowed(n: &ImageGrid, p: &ImageGrid, block: usize) -> Result<f64> {
    let (a, b) = to_255(n, p)?;
    let (h, w) = n.dims();
    if block == 0 || h < block || w < block {
        let (ma, mb, va, vb, cov) = moments(&a, &b);
        return Ok(uiq_from_moments(ma, mb, va, vb, cov));
    }
    let area = (block * block) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for top in 0..=h - block {
        for left in 0..=w - block {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in top..top + block {
                for c in left..left + block {
                    let (x, y) = (a[r * w + c], b[r * w + c]);
                    sa += x;
                    sb += y;
                    saa += x * x;
                    sbb += y * y;
                    sab += x * y;
                }
            }
            let (ma, mb) = (sa / area, sb / area);
            // unbiased window moments, as in the reference implementation
            let norm = area - 1.0;
            let va = (saa - area * ma * ma) / norm;
            let vb = (sbb - area * mb * mb) / norm;
            let cov = (sab - area * ma * mb) / norm;
            total += uiq_from_moments(ma, mb, va, vb, cov);
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: usize, w: usize, f: impl FnMut(usize, usize) -> f64) -> ImageGrid {
        ImageGrid::from_fn(h, w, f).unwrap()
    }

    #[test]
    fn mse_offset() {
        let n = grid(4, 4, |r, c| (r * 4 + c) as f64 / 40.0);
        let p = n.map(|v| v + 10.0 / 255.0).unwrap();
        assert!((mse(&n, &p).unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(mse(&n, &n).unwrap(), 0.0);
    }

    #[test]
    fn nrmse_constant_pair() {
        let n = ImageGrid::filled(3, 5, 10.0 / 255.0).unwrap();
        let p = ImageGrid::filled(3, 5, 11.0 / 255.0).unwrap();
        assert!((nrmse(&n, &p).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(nrmse(&n, &n).unwrap(), 0.0);
        let black = ImageGrid::filled(3, 5, 0.0).unwrap();
        assert_eq!(nrmse(&black, &p).unwrap(), f64::INFINITY);
        assert_eq!(nrmse(&black, &black).unwrap(), 0.0);
    }

    #[test]
    fn ncc_signs() {
        let n = grid(6, 7, |r, c| ((r * 7 + c) as f64 * 0.37).sin() * 0.4 + 0.5);
        assert!((ncc(&n, &n).unwrap() - 1.0).abs() < 1e-12);
        let flipped = n.map(|v| 1.0 - v).unwrap();
        assert!((ncc(&n, &flipped).unwrap() + 1.0).abs() < 1e-12);
        let affine = n.map(|v| 0.5 * v + 0.2).unwrap();
        assert!((ncc(&affine, &n).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_reference_value() {
        let mut n = vec![0.5; 16];
        n[0] = 1.0;
        let n = ImageGrid::new(4, 4, n).unwrap();
        let p = n.map(|v| v - 10.0 / 255.0).unwrap();
        assert!((mse(&n, &p).unwrap() - 100.0).abs() < 1e-9);
        assert!((psnr(&n, &p).unwrap() - 28.130803608679102).abs() < 1e-9);
        assert_eq!(psnr(&n, &n).unwrap(), f64::INFINITY);
    }

    #[test]
    fn uiq_cases() {
        let n = grid(8, 8, |r, c| ((r * 8 + c) as f64 * 0.9).cos() * 0.3 + 0.5);
        assert!((uiq(&n, &n).unwrap() - 1.0).abs() < 1e-12);
        let shifted = n.map(|v| v + 0.1).unwrap();
        let q = uiq(&n, &shifted).unwrap();
        assert!(q < 1.0 && q > 0.9);
        let c = ImageGrid::filled(8, 8, 0.3).unwrap();
        assert_eq!(uiq(&c, &c).unwrap(), 1.0);
        assert!((uiq_windowed(&n, &n, 8).unwrap() - 1.0).abs() < 1e-12);
    }
}
