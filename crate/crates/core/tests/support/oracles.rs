//! Direct-formula reference implementations used as test oracles. They favour
//! obviousness over speed and share no code with the library beyond the
//! SSIM window taps and the FSIM frequency responses.

#![allow(dead_code)]

use std::f64::consts::PI;

use noisr_core::metrics::ssim::gaussian_window;
use noisr_core::metrics::{FilterBank, FsimParams, SsimParams};
use noisr_core::ImageGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C {
    pub re: f64,
    pub im: f64,
}

impl C {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
    fn mul(self, o: C) -> C {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
    fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }
    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
}

pub fn scaled(img: &ImageGrid) -> Vec<f64> {
    img.data().iter().map(|v| v.clamp(0.0, 1.0) * 255.0).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn mse(n: &ImageGrid, p: &ImageGrid) -> f64 {
    let (a, b) = (scaled(n), scaled(p));
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += (a[i] - b[i]).powi(2);
    }
    acc / a.len() as f64
}

pub fn nrmse(n: &ImageGrid, p: &ImageGrid) -> f64 {
    let (a, b) = (scaled(n), scaled(p));
    let num: f64 = (0..a.len()).map(|i| (a[i] - b[i]).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x.powi(2)).sum();
    (num / den).sqrt()
}

pub fn ncc(n: &ImageGrid, p: &ImageGrid) -> f64 {
    let (a, b) = (scaled(n), scaled(p));
    let (ma, mb) = (mean(&a), mean(&b));
    let num: f64 = (0..a.len()).map(|i| (a[i] - ma) * (b[i] - mb)).sum();
    let da: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let db: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    num / (da * db).sqrt()
}

pub fn psnr(n: &ImageGrid, p: &ImageGrid) -> f64 {
    let peak = scaled(n).into_iter().fold(0.0, f64::max);
    10.0 * (peak * peak / mse(n, p)).log10()
}

pub fn uiq(n: &ImageGrid, p: &ImageGrid) -> f64 {
    let (a, b) = (scaled(n), scaled(p));
    let m = a.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / m;
    let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / m;
    let cov = (0..a.len()).map(|i| (a[i] - ma) * (b[i] - mb)).sum::<f64>() / m;
    4.0 * cov * ma * mb / ((va + vb) * (ma * ma + mb * mb))
}

/// Mean of `l c s` over every fully contained window position.
pub fn ssim(n: &ImageGrid, p: &ImageGrid, params: &SsimParams) -> f64 {
    let (a, b) = (scaled(n), scaled(p));
    let (h, w) = n.dims();
    let k = params.window;
    let taps = gaussian_window(k, params.window_std);
    let mut total = 0.0;
    let mut count = 0;
    for top in 0..=h - k {
        for left in 0..=w - k {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let wt = taps[i] * taps[j];
                    let idx = (top + i) * w + left + j;
                    ma += wt * a[idx];
                    mb += wt * b[idx];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let wt = taps[i] * taps[j];
                    let idx = (top + i) * w + left + j;
                    va += wt * (a[idx] - ma).powi(2);
                    vb += wt * (b[idx] - mb).powi(2);
                    cov += wt * (a[idx] - ma) * (b[idx] - mb);
                }
            }
            let (sa, sb) = (va.sqrt(), vb.sqrt());
            let l = (2.0 * ma * mb + params.c1) / (ma * ma + mb * mb + params.c1);
            let c = (2.0 * sa * sb + params.c2) / (va + vb + params.c2);
            let s = (cov + params.c3) / (sa * sb + params.c3);
            total += l * c * s;
            count += 1;
        }
    }
    total / count as f64
}

/// 1D DFT by definition; `sign` is -1 forward, +1 inverse (unscaled).
fn dft_1d(x: &[C], sign: f64) -> Vec<C> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = C::new(0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let ang = sign * 2.0 * PI * ((k * t) % n) as f64 / n as f64;
                acc = acc.add(v.mul(C::new(ang.cos(), ang.sin())));
            }
            acc
        })
        .collect()
}

/// 2D DFT as row transforms followed by column transforms; the inverse is
/// scaled by `1 / (rows cols)`.
pub fn dft_2d(x: &[C], rows: usize, cols: usize, inverse: bool) -> Vec<C> {
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut tmp = vec![C::new(0.0, 0.0); rows * cols];
    for r in 0..rows {
        let row = dft_1d(&x[r * cols..(r + 1) * cols], sign);
        tmp[r * cols..(r + 1) * cols].copy_from_slice(&row);
    }
    let mut out = vec![C::new(0.0, 0.0); rows * cols];
    for c in 0..cols {
        let col: Vec<C> = (0..rows).map(|r| tmp[r * cols + c]).collect();
        for (r, v) in dft_1d(&col, sign).into_iter().enumerate() {
            out[r * cols + c] = v;
        }
    }
    if inverse {
        let s = 1.0 / (rows * cols) as f64;
        for v in &mut out {
            *v = C::new(v.re * s, v.im * s);
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Phase congruency of an 8-bit-scale field using the frequency responses of
/// `bank`, with Kovesi's energy weighting and Rayleigh noise model.
pub fn phase_congruency(x: &[f64], rows: usize, cols: usize, bank: &FilterBank, params: &FsimParams) -> Vec<f64> {
    let n = rows * cols;
    if x.iter().all(|&v| v == x[0]) {
        return vec![0.0; n];
    }
    let input: Vec<C> = x.iter().map(|&v| C::new(v, 0.0)).collect();
    let spectrum = dft_2d(&input, rows, cols, false);
    let mut energy_total = vec![0.0; n];
    let mut amp_total = vec![0.0; n];
    for o in 0..params.orientations {
        let mut eo: Vec<Vec<C>> = Vec::new();
        let mut spatial_filters: Vec<Vec<f64>> = Vec::new();
        for s in 0..params.scales {
            let f = bank.filter(o, s);
            let product: Vec<C> = spectrum.iter().zip(f).map(|(v, &g)| C::new(v.re * g, v.im * g)).collect();
            eo.push(dft_2d(&product, rows, cols, true));
            let fc: Vec<C> = f.iter().map(|&g| C::new(g, 0.0)).collect();
            spatial_filters.push(dft_2d(&fc, rows, cols, true).iter().map(|v| v.re * (n as f64).sqrt()).collect());
        }
        let an: Vec<Vec<f64>> = eo.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect();
        let sum_an: Vec<f64> = (0..n).map(|i| an.iter().map(|a| a[i]).sum()).collect();
        let eps = params.epsilon * mean(&sum_an);
        let mut energy = vec![0.0; n];
        for i in 0..n {
            let se: f64 = eo.iter().map(|r| r[i].re).sum();
            let so: f64 = eo.iter().map(|r| r[i].im).sum();
            let xe = (se * se + so * so).sqrt() + eps;
            let (me, mo) = (se / xe, so / xe);
            for r in &eo {
                energy[i] += r[i].re * me + r[i].im * mo - (r[i].re * mo - r[i].im * me).abs();
            }
        }
        // noise: Rayleigh fit to the finest-scale response power
        let finest_power: Vec<f64> = eo[0].iter().map(|v| v.re * v.re + v.im * v.im).collect();
        let mean_e2n = -median(finest_power) / 0.5f64.ln();
        let filter_energy: f64 = bank.filter(o, 0).iter().map(|g| g * g).sum();
        let noise_power = mean_e2n / filter_energy;
        let mut est_sum_an2 = 0.0;
        for f in &spatial_filters {
            est_sum_an2 += f.iter().map(|v| v * v).sum::<f64>();
        }
        let mut est_sum_ai_aj = 0.0;
        for si in 0..params.scales {
            for sj in si + 1..params.scales {
                est_sum_ai_aj += (0..n).map(|i| spatial_filters[si][i] * spatial_filters[sj][i]).sum::<f64>();
            }
        }
        let est_noise_energy2 = 2.0 * noise_power * est_sum_an2 + 4.0 * noise_power * est_sum_ai_aj;
        let tau = (est_noise_energy2 / 2.0).sqrt();
        let est_noise_energy = tau * (PI / 2.0).sqrt();
        let est_noise_sigma = ((2.0 - PI / 2.0) * tau * tau).sqrt();
        let t = (est_noise_energy + params.noise_k * est_noise_sigma) / 1.7;
        for i in 0..n {
            energy_total[i] += (energy[i] - t).max(0.0);
            amp_total[i] += sum_an[i];
        }
    }
    (0..n)
        .map(|i| if amp_total[i] > 0.0 { (energy_total[i] / amp_total[i]).min(1.0) } else { 0.0 })
        .collect()
}

/// Scharr gradient magnitude divided by 16, zero outside the image.
pub fn gradient(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let px = |r: isize, c: isize| {
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            0.0
        } else {
            x[r as usize * cols + c as usize]
        }
    };
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let gx = 3.0 * (px(r - 1, c - 1) - px(r - 1, c + 1))
                + 10.0 * (px(r, c - 1) - px(r, c + 1))
                + 3.0 * (px(r + 1, c - 1) - px(r + 1, c + 1));
            let gy = 3.0 * (px(r - 1, c - 1) - px(r + 1, c - 1))
                + 10.0 * (px(r - 1, c) - px(r + 1, c))
                + 3.0 * (px(r - 1, c + 1) - px(r + 1, c + 1));
            out.push((gx * gx + gy * gy).sqrt() / 16.0);
        }
    }
    out
}

pub fn fsim(n: &ImageGrid, p: &ImageGrid, params: &FsimParams) -> f64 {
    let (rows, cols) = n.dims();
    let bank = FilterBank::new(rows, cols, params).expect("filter bank");
    let (a, b) = (scaled(n), scaled(p));
    let (pa, pb) = (phase_congruency(&a, rows, cols, &bank, params), phase_congruency(&b, rows, cols, &bank, params));
    let (ga, gb) = (gradient(&a, rows, cols), gradient(&b, rows, cols));
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..a.len() {
        let spc = (2.0 * pa[i] * pb[i] + params.t1) / (pa[i].powi(2) + pb[i].powi(2) + params.t1);
        let sg = (2.0 * ga[i] * gb[i] + params.t2) / (ga[i].powi(2) + gb[i].powi(2) + params.t2);
        let pcm = pa[i].max(pb[i]);
        num += spc * sg * pcm;
        den += pcm;
    }
    num / den
}

/// Smooth random field plus per-pixel jitter, and a perturbed copy.
pub fn random_pair(seed: u64) -> (ImageGrid, ImageGrid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fy, fx, ph): (f64, f64, f64) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6), rng.random_range(0.0..6.0));
    let mut n = Vec::with_capacity(32 * 32);
    let mut p = Vec::with_capacity(32 * 32);
    for r in 0..32 {
        for c in 0..32 {
            let v = 0.5 + 0.3 * (fy * r as f64 + ph).sin() * (fx * c as f64).cos() + rng.random_range(-0.1..0.1);
            n.push(v);
            p.push(v * 0.9 + 0.05 + rng.random_range(-0.08..0.08));
        }
    }
    (ImageGrid::new(32, 32, n).unwrap().clipped(), ImageGrid::new(32, 32, p).unwrap().clipped())
}
