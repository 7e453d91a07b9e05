//! Decimation and sample-aligned interpolating upsamplers.
//!
//! Both upsamplers place input pixel `(r, c)` at output position `(k r, k c)`,
//! the same grid that [`decimate`] keeps, so kept pixels are interpolation
//! nodes. Borders use edge replication.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// Keys kernel parameter.
pub const KEYS_A: f64 = -0.5;

/// Integer up/down-sampling factor, 2 or 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamplingFactor(usize);

impl SamplingFactor {
    pub const X2: SamplingFactor = SamplingFactor(2);
    pub const X4: SamplingFactor = SamplingFactor(4);

    pub fn new(k: usize) -> Result<Self> {
        match k {
            2 | 4 => Ok(Self(k)),
            other => Err(Error::InvalidArgument(format!(
                "sampling factor must be 2 or 4, got {other}"
            ))),
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for SamplingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for SamplingFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_end_matches(['x', 'X']);
        let k: usize = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad sampling factor '{s}'")))?;
        Self::new(k)
    }
}

/// Keeps rows and columns whose index is a multiple of `k`.
pub fn decimate(n: &ImageGrid, k: SamplingFactor) -> Result<ImageGrid> {
    let k = k.get();
    let (h, w) = n.dims();
    if h % k != 0 || w % k != 0 {
        return Err(Error::InvalidArgument(format!(
            "{h}x{w} image is not divisible by decimation factor {k}"
        )));
    }
    ImageGrid::from_fn(h / k, w / k, |r, c| n.get(k * r, k * c))
}

/// Keys cubic convolution kernel.
#[inline]
pub fn cubic_kernel(s: f64, a: f64) -> f64 {
    let s = s.abs();
    if s <= 1.0 {
        ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0
    } else if s < 2.0 {
        ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a
    } else {
        0.0
    }
}

/// Per-output-position taps along one axis: source indices and weights.
fn axis_taps<const N: usize>(
    len: usize,
    k: usize,
    weights: impl Fn(f64) -> [f64; N],
    first_offset: isize,
) -> Vec<([usize; N], [f64; N])> {
    (0..len * k)
        .map(|o| {
            let base = (o / k) as isize;
            let phase = (o % k) as f64 / k as f64;
            let mut idx = [0usize; N];
            for (j, slot) in idx.iter_mut().enumerate() {
                *slot = (base + first_offset + j as isize).clamp(0, len as isize - 1) as usize;
            }
            (idx, weights(phase))
        })
        .collect()
}

fn separable_upsample<const N: usize>(
    l: &ImageGrid,
    k: usize,
    weights: impl Fn(f64) -> [f64; N] + Copy,
    first_offset: isize,
) -> Result<ImageGrid> {
    let (h, w) = l.dims();
    let rows = axis_taps(h, k, weights, first_offset);
    let cols = axis_taps(w, k, weights, first_offset);
    // horizontal pass: h x (k w)
    let mut tmp = vec![0.0; h * w * k];
    for r in 0..h {
        for (c, (idx, wts)) in cols.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..N {
                acc += wts[j] * l.get(r, idx[j]);
            }
            tmp[r * w * k + c] = acc;
        }
    }
    let ow = w * k;
    let mut out = vec![0.0; h * k * ow];
    for (r, (idx, wts)) in rows.iter().enumerate() {
        for c in 0..ow {
            let mut acc = 0.0;
            for j in 0..N {
                acc += wts[j] * tmp[idx[j] * ow + c];
            }
            out[r * ow + c] = acc.clamp(0.0, 1.0);
        }
    }
    ImageGrid::new(h * k, ow, out)
}

fn cubic_weights(phase: f64) -> [f64; 4] {
    [
        cubic_kernel(phase + 1.0, KEYS_A),
        cubic_kernel(phase, KEYS_A),
        cubic_kernel(1.0 - phase, KEYS_A),
        cubic_kernel(2.0 - phase, KEYS_A),
    ]
}

fn linear_weights(phase: f64) -> [f64; 2] {
    [1.0 - phase, phase]
}

/// Cubic convolution upsampling over the 4x4 neighbourhood.
pub fn upsample_cc(l: &ImageGrid, k: SamplingFactor) -> Result<ImageGrid> {
    let (h, w) = l.dims();
    if h < 4 || w < 4 {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            requirement: "cubic convolution needs at least 4 pixels per side".into(),
        });
    }
    separable_upsample(l, k.get(), cubic_weights, -1)
}

/// Bilinear upsampling over the 2x2 neighbourhood.
pub fn upsample_bilinear(l: &ImageGrid, k: SamplingFactor) -> Result<ImageGrid> {
    let (h, w) = l.dims();
    if h < 2 || w < 2 {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            requirement: "bilinear interpolation needs at least 2 pixels per side".into(),
        });
    }
    separable_upsample(l, k.get(), linear_weights, 0)
}
