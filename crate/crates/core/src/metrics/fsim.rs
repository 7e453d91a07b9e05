//! Feature similarity (FSIM): phase congruency from a log-Gabor filter bank
//! combined with Scharr gradient magnitude similarity.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::to_255;
use crate::error::{Error, Result};
use crate::image::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsimParams {
    pub scales: usize,
    pub orientations: usize,
    pub min_wavelength: f64,
    /// Wavelength ratio between successive scales.
    pub mult: f64,
    /// Log-Gabor bandwidth: ratio of the Gaussian std to the centre frequency.
    pub sigma_on_f: f64,
    /// Ratio of the angular spacing to the angular std of the filters.
    pub d_theta_on_sigma: f64,
    /// Number of noise standard deviations rejected by the energy threshold.
    pub noise_k: f64,
    /// Relative stabilizer of the energy normalization.
    pub epsilon: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Default for FsimParams {
    fn default() -> Self {
        Self {
            scales: 4,
            orientations: 4,
            min_wavelength: 6.0,
            mult: 2.0,
            sigma_on_f: 0.55,
            d_theta_on_sigma: 1.2,
            noise_k: 2.0,
            epsilon: 1e-4,
            t1: 0.85,
            t2: 160.0,
        }
    }
}

impl FsimParams {
    fn validate(&self) -> Result<()> {
        if self.scales == 0 || self.orientations == 0 {
            return Err(Error::InvalidArgument("FSIM needs at least one scale and orientation".into()));
        }
        if !(self.t1 > 0.0 && self.t2 > 0.0) {
            return Err(Error::InvalidArgument("FSIM stabilizers must be positive".into()));
        }
        if !(self.min_wavelength > 0.0 && self.mult > 0.0 && self.sigma_on_f > 0.0 && self.d_theta_on_sigma > 0.0) {
            return Err(Error::InvalidArgument("FSIM filter settings must be positive".into()));
        }
        Ok(())
    }

    fn cache_key(&self, rows: usize, cols: usize) -> (usize, usize, [u64; 8]) {
        (
            rows,
            cols,
            [
                self.scales as u64,
                self.orientations as u64,
                self.min_wavelength.to_bits(),
                self.mult.to_bits(),
                self.sigma_on_f.to_bits(),
                self.d_theta_on_sigma.to_bits(),
                self.noise_k.to_bits(),
                self.epsilon.to_bits(),
            ],
        )
    }
}

/// Frequency-domain filters for one image size, plus the per-orientation
/// noise-model sums that depend only on the filters.
#[derive(Debug)]
pub struct FilterBank {
    rows: usize,
    cols: usize,
    /// `filters[o][s]`, stored in unshifted FFT order.
    filters: Vec<Vec<Vec<f64>>>,
    /// Squared-norm of the finest filter per orientation.
    finest_energy: Vec<f64>,
    /// `(sum_s |f_s|^2, sum_{s<t} <f_s, f_t>)` of the spatial-domain filters.
    noise_sums: Vec<(f64, f64)>,
}

/// Symmetric frequency coordinates as in the usual meshgrid construction,
/// already rearranged into FFT order.
fn freq_axis(n: usize) -> Vec<f64> {
    let centered: Vec<f64> = if n % 2 == 1 {
        let half = (n as f64 - 1.0) / 2.0;
        (0..n).map(|i| (i as f64 - half) / (n as f64 - 1.0).max(1.0)).collect()
    } else {
        (0..n).map(|i| (i as f64 - (n / 2) as f64) / n as f64).collect()
    };
    // ifftshift
    let shift = n / 2;
    (0..n).map(|i| centered[(i + shift) % n]).collect()
}

fn fft2(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
    } else {
        (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
    };
    for row in data.chunks_mut(cols) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
    if inverse {
        let scale = 1.0 / (rows * cols) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

impl FilterBank {
    pub fn new(rows: usize, cols: usize, params: &FsimParams) -> Result<Self> {
        params.validate()?;
        let xs = freq_axis(cols);
        let ys = freq_axis(rows);
        let n = rows * cols;
        let mut radius = vec![0.0; n];
        let mut theta = vec![0.0; n];
        for r in 0..rows {
            for c in 0..cols {
                let (x, y) = (xs[c], ys[r]);
                radius[r * cols + c] = (x * x + y * y).sqrt();
                theta[r * cols + c] = (-y).atan2(x);
            }
        }
        // Butterworth low-pass, cutoff 0.45, order 15.
        let lowpass: Vec<f64> = radius
            .iter()
            .map(|&rad| 1.0 / (1.0 + (rad / 0.45).powi(30)))
            .collect();
        radius[0] = 1.0;

        let log_sigma_sq = 2.0 * params.sigma_on_f.ln().powi(2);
        let log_gabor: Vec<Vec<f64>> = (0..params.scales)
            .map(|s| {
                let wavelength = params.min_wavelength * params.mult.powi(s as i32);
                let fo = 1.0 / wavelength;
                let mut lg: Vec<f64> = radius
                    .iter()
                    .zip(&lowpass)
                    .map(|(&rad, &lp)| (-(rad / fo).ln().powi(2) / log_sigma_sq).exp() * lp)
                    .collect();
                lg[0] = 0.0;
                lg
            })
            .collect();

        let theta_sigma = PI / params.orientations as f64 / params.d_theta_on_sigma;
        let mut filters = Vec::with_capacity(params.orientations);
        let mut finest_energy = Vec::with_capacity(params.orientations);
        let mut noise_sums = Vec::with_capacity(params.orientations);
        for o in 0..params.orientations {
            let angle = o as f64 * PI / params.orientations as f64;
            let (sa, ca) = angle.sin_cos();
            let spread: Vec<f64> = theta
                .iter()
                .map(|&t| {
                    let (st, ct) = t.sin_cos();
                    let ds = st * ca - ct * sa;
                    let dc = ct * ca + st * sa;
                    let d = ds.atan2(dc).abs();
                    (-d * d / (2.0 * theta_sigma * theta_sigma)).exp()
                })
                .collect();
            let per_scale: Vec<Vec<f64>> = log_gabor
                .iter()
                .map(|lg| lg.iter().zip(&spread).map(|(a, b)| a * b).collect())
                .collect();
            finest_energy.push(per_scale[0].iter().map(|v| v * v).sum());

            let spatial: Vec<Vec<f64>> = per_scale
                .iter()
                .map(|f| {
                    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                    fft2(&mut buf, rows, cols, true);
                    let norm = (n as f64).sqrt();
                    buf.iter().map(|v| v.re * norm).collect()
                })
                .collect();
            let sum_sq: f64 = spatial.iter().flat_map(|f| f.iter().map(|v| v * v)).sum();
            let mut sum_cross = 0.0;
            for si in 0..spatial.len() {
                for sj in si + 1..spatial.len() {
                    sum_cross += spatial[si].iter().zip(&spatial[sj]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            noise_sums.push((sum_sq, sum_cross));
            filters.push(per_scale);
        }
        Ok(Self {
            rows,
            cols,
            filters,
            finest_energy,
            noise_sums,
        })
    }

    /// Shared filter bank for `(rows, cols, params)`.
    pub fn cached(rows: usize, cols: usize, params: &FsimParams) -> Result<Arc<FilterBank>> {
        type Cache = Mutex<HashMap<(usize, usize, [u64; 8]), Arc<FilterBank>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let key = params.cache_key(rows, cols);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(bank) = cache.lock().expect("filter cache poisoned").get(&key) {
            return Ok(Arc::clone(bank));
        }
        let bank = Arc::new(FilterBank::new(rows, cols, params)?);
        let mut guard = cache.lock().expect("filter cache poisoned");
        // bound the cache; evaluation usually sees a handful of sizes
        if guard.len() >= 32 {
            guard.clear();
        }
        Ok(Arc::clone(guard.entry(key).or_insert(bank)))
    }

    /// Frequency response `filters[orientation][scale]` in FFT order.
    pub fn filter(&self, orientation: usize, scale: usize) -> &[f64] {
        &self.filters[orientation][scale]
    }
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Phase congruency of a raw intensity field (any scale), using the given
/// filter bank. Constant inputs give the zero map.
pub fn phase_congruency_raw(
    data: &[f64],
    bank: &FilterBank,
    params: &FsimParams,
) -> Vec<f64> {
    let (rows, cols) = (bank.rows, bank.cols);
    let n = rows * cols;
    assert_eq!(data.len(), n, "filter bank size mismatch");
    if data.iter().all(|&v| v == data[0]) {
        return vec![0.0; n];
    }
    let mut spectrum: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut spectrum, rows, cols, false);

    let mut energy_all = vec![0.0; n];
    let mut amplitude_all = vec![0.0; n];
    for o in 0..params.orientations {
        let responses: Vec<Vec<Complex64>> = bank.filters[o]
            .iter()
            .map(|f| {
                let mut buf: Vec<Complex64> = spectrum.iter().zip(f).map(|(s, &w)| s * w).collect();
                fft2(&mut buf, rows, cols, true);
                buf
            })
            .collect();
        let mut sum_e = vec![0.0; n];
        let mut sum_o = vec![0.0; n];
        let mut sum_an = vec![0.0; n];
        for resp in &responses {
            for i in 0..n {
                sum_e[i] += resp[i].re;
                sum_o[i] += resp[i].im;
                sum_an[i] += resp[i].norm();
            }
        }
        // epsilon scaled by the mean amplitude keeps the map contrast invariant
        let stabilizer = params.epsilon * sum_an.iter().sum::<f64>() / n as f64;
        let mut energy = vec![0.0; n];
        for i in 0..n {
            let x_energy = (sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]).sqrt() + stabilizer;
            if x_energy == 0.0 {
                continue;
            }
            let (mean_e, mean_o) = (sum_e[i] / x_energy, sum_o[i] / x_energy);
            for resp in &responses {
                let (e, od) = (resp[i].re, resp[i].im);
                energy[i] += e * mean_e + od * mean_o - (e * mean_o - od * mean_e).abs();
            }
        }

        // Noise threshold from the median finest-scale response power.
        let mut power: Vec<f64> = responses[0].iter().map(|v| v.norm_sqr()).collect();
        let mean_e2n = -median(&mut power) / 0.5f64.ln();
        let noise_power = mean_e2n / bank.finest_energy[o];
        let (sum_sq, sum_cross) = bank.noise_sums[o];
        let noise_energy_sq = 2.0 * noise_power * sum_sq + 4.0 * noise_power * sum_cross;
        let tau = (noise_energy_sq / 2.0).max(0.0).sqrt();
        let noise_mean = tau * (PI / 2.0).sqrt();
        let noise_sigma = ((2.0 - PI / 2.0) * tau * tau).sqrt();
        let threshold = (noise_mean + params.noise_k * noise_sigma) / 1.7;

        for i in 0..n {
            energy_all[i] += (energy[i] - threshold).max(0.0);
            amplitude_all[i] += sum_an[i];
        }
    }
    let peak = amplitude_all.iter().cloned().fold(0.0, f64::max);
    energy_all
        .iter()
        .zip(&amplitude_all)
        .map(|(&e, &a)| {
            if a <= peak * 1e-12 || a == 0.0 {
                0.0
            } else {
                (e / a).clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Per-pixel phase congruency in `[0, 1]` of an image on the 8-bit scale.
pub fn phase_congruency(x: &ImageGrid, params: &FsimParams) -> Result<ImageGrid> {
    let bank = FilterBank::cached(x.height(), x.width(), params)?;
    let scaled: Vec<f64> = x.clipped().data().iter().map(|v| v * 255.0).collect();
    let pc = phase_congruency_raw(&scaled, &bank, params);
    ImageGrid::new(x.height(), x.width(), pc)
}

/// Scharr gradient magnitude with zero padding outside the image.
pub fn gradient_magnitude_raw(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    const K: [[f64; 3]; 3] = [[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]];
    let at = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            0.0
        } else {
            data[r as usize * cols + c as usize]
        }
    };
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (i, row) in K.iter().enumerate() {
                for (j, &k) in row.iter().enumerate() {
                    let v = at(r + i as isize - 1, c + j as isize - 1);
                    gx += k * v;
                    // vertical kernel is the transpose
                    gy += K[j][i] * v;
                }
            }
            out[r as usize * cols + c as usize] = (gx * gx + gy * gy).sqrt() / 16.0;
        }
    }
    out
}

/// Pooling stage of FSIM given phase congruency and gradient maps of both
/// images. When neither image has any phase structure the similarity map is
/// averaged uniformly.
pub fn fsim_from_maps(
    pc_a: &[f64],
    pc_b: &[f64],
    gm_a: &[f64],
    gm_b: &[f64],
    params: &FsimParams,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut plain = 0.0;
    for i in 0..pc_a.len() {
        let s_pc = (2.0 * pc_a[i] * pc_b[i] + params.t1)
            / (pc_a[i] * pc_a[i] + pc_b[i] * pc_b[i] + params.t1);
        let s_g = (2.0 * gm_a[i] * gm_b[i] + params.t2)
            / (gm_a[i] * gm_a[i] + gm_b[i] * gm_b[i] + params.t2);
        let s_l = s_pc * s_g;
        let weight = pc_a[i].max(pc_b[i]);
        num += s_l * weight;
        den += weight;
        plain += s_l;
    }
    if den > 0.0 {
        num / den
    } else {
        plain / pc_a.len() as f64
    }
}

pub fn fsim(n: &ImageGrid, p: &ImageGrid, params: &FsimParams) -> Result<f64> {
    let (a, b) = to_255(n, p)?;
    let (rows, cols) = n.dims();
    let bank = FilterBank::cached(rows, cols, params)?;
    let pc_a = phase_congruency_raw(&a, &bank, params);
    let pc_b = phase_congruency_raw(&b, &bank, params);
    let gm_a = gradient_magnitude_raw(&a, rows, cols);
    let gm_b = gradient_magnitude_raw(&b, rows, cols);
    Ok(fsim_from_maps(&pc_a, &pc_b, &gm_a, &gm_b, params))
}
