//! Structural similarity as the product of luminance, contrast and structure
//! terms, evaluated over a sliding Gaussian window.

use super::to_255;
use crate::error::{Error, Result};
use crate::image::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Side of the square window; zero selects global moments.
    pub window: usize,
    pub window_std: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        let c1 = (0.01f64 * 255.0).powi(2);
        let c2 = (0.03f64 * 255.0).powi(2);
        Self {
            c1,
            c2,
            c3: c2 / 2.0,
            window: 11,
            window_std: 1.5,
        }
    }
}

impl SsimParams {
    /// The same stabilizers with whole-image moments instead of a window.
    pub fn global() -> Self {
        Self {
            window: 0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c3 > 0.0) {
            return Err(Error::InvalidArgument("SSIM stabilizers must be positive".into()));
        }
        if self.window > 0 && !(self.window_std > 0.0) {
            return Err(Error::InvalidArgument("SSIM window std must be positive".into()));
        }
        Ok(())
    }
}

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
pub fn gaussian_window(size: usize, std: f64) -> Vec<f64> {
    let center = (size as f64 - 1.0) / 2.0;
    let mut taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - center;
            (-d * d / (2.0 * std * std)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// `l * c * s` for one set of local moments.
#[inline]
pub fn lcs(params: &SsimParams, mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
    let sa = var_a.max(0.0).sqrt();
    let sb = var_b.max(0.0).sqrt();
    let l = (2.0 * mu_a * mu_b + params.c1) / (mu_a * mu_a + mu_b * mu_b + params.c1);
    let c = (2.0 * sa * sb + params.c2) / (sa * sa + sb * sb + params.c2);
    let s = (cov + params.c3) / (sa * sb + params.c3);
    l * c * s
}

/// Valid-mode separable filtering of `src` (`h x w`) with `taps`.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut horiz = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            let row = &src[r * w + c..r * w + c + n];
            horiz[r * ow + c] = row.iter().zip(taps).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for (j, t) in taps.iter().enumerate() {
                acc += t * horiz[(r + j) * ow + c];
            }
            out[r * ow + c] = acc;
        }
    }
    out
}

/// Per-window SSIM values. With a window larger than the image, or
/// `window == 0`, a single global value is returned.
pub fn ssim_map(n: &ImageGrid, p: &ImageGrid, params: &SsimParams) -> Result<Vec<f64>> {
    params.validate()?;
    let (a, b) = to_255(n, p)?;
    let (h, w) = n.dims();
    if params.window == 0 || h < params.window || w < params.window {
        let m = a.len() as f64;
        let ma = a.iter().sum::<f64>() / m;
        let mb = b.iter().sum::<f64>() / m;
        let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(&b) {
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
            cov += (x - ma) * (y - mb);
        }
        return Ok(vec![lcs(params, ma, mb, va / m, vb / m, cov / m)]);
    }
    let taps = gaussian_window(params.window, params.window_std);
    let aa: Vec<f64> = a.iter().map(|x| x * x).collect();
    let bb: Vec<f64> = b.iter().map(|x| x * x).collect();
    let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(&a, h, w, &taps);
    let mu_b = filter_valid(&b, h, w, &taps);
    let e_aa = filter_valid(&aa, h, w, &taps);
    let e_bb = filter_valid(&bb, h, w, &taps);
    let e_ab = filter_valid(&ab, h, w, &taps);
    Ok((0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            lcs(
                params,
                ma,
                mb,
                e_aa[i] - ma * ma,
                e_bb[i] - mb * mb,
                e_ab[i] - ma * mb,
            )
        })
        .collect())
}

/// Mean SSIM over all window positions.
pub fn ssim(n: &ImageGrid, p: &ImageGrid, params: &SsimParams) -> Result<f64> {
    let map = ssim_map(n, p, params)?;
    Ok(map.iter().sum::<f64>() / map.len() as f64)
}
