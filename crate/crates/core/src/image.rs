//! Grayscale intensity grids, raster I/O and normalization.
//!
//! Every image in the pipeline (ground truth, noisy target, low-resolution
//! input, prediction) is an [`ImageGrid`] of `f64` intensities on the `[0, 1]`
//! scale, stored row-major.

use std::path::Path;

use crate::error::{Error, Result};

/// A 2D grayscale intensity field, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != height * width {
            return Err(Error::InvalidArgument(format!(
                "{} intensities for a {height}x{width} image",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image intensities".into()));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Pixel-wise combination of two equally sized images.
    pub fn zip_map(&self, other: &ImageGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.height, self.width, data)
    }

    pub fn clipped(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    /// Rectangular sub-image starting at `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::InvalidArgument(format!(
                "crop {height}x{width}+{top}+{left} exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width);
        for r in top..top + height {
            let row = r * self.width;
            data.extend_from_slice(&self.data[row + left..row + left + width]);
        }
        Self::new(height, width, data)
    }

    pub fn check_same_dims(&self, other: &ImageGrid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left_h: self.height,
                left_w: self.width,
                right_h: other.height,
                right_w: other.width,
            });
        }
        Ok(())
    }
}

/// Dataset-level mean and standard deviation used to normalize network inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationStats {
    pub mean: f64,
    pub std: f64,
}

impl NormalizationStats {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0) || !std.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "normalization needs a finite mean and positive std, got mean={mean} std={std}"
            )));
        }
        Ok(Self { mean, std })
    }
}

pub fn normalize(img: &ImageGrid, stats: &NormalizationStats) -> Result<ImageGrid> {
    let stats = NormalizationStats::new(stats.mean, stats.std)?;
    img.map(|v| (v - stats.mean) / stats.std)
}

pub fn denormalize(img: &ImageGrid, stats: &NormalizationStats) -> Result<ImageGrid> {
    let stats = NormalizationStats::new(stats.mean, stats.std)?;
    img.map(|v| v * stats.std + stats.mean)
}

/// Pooled statistics over every pixel of every image. A standard deviation
/// below `1e-8` is replaced by 1.
pub fn compute_dataset_stats<'a, I>(images: I) -> Result<NormalizationStats>
where
    I: IntoIterator<Item = &'a ImageGrid>,
{
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let images: Vec<&ImageGrid> = images.into_iter().collect();
    for img in &images {
        count += img.len();
        sum += img.data().iter().sum::<f64>();
    }
    if count == 0 {
        return Err(Error::Empty("no images to compute statistics from".into()));
    }
    let mean = sum / count as f64;
    for img in &images {
        sum_sq += img.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    }
    let mut std = (sum_sq / count as f64).sqrt();
    if std < 1e-8 {
        std = 1.0;
    }
    NormalizationStats::new(mean, std)
}

/// Largest centered sub-image whose dimensions are multiples of `k`. When the
/// excess is odd, the extra row/column is dropped from the bottom/right.
pub fn center_crop_to_multiple(img: &ImageGrid, k: usize) -> Result<ImageGrid> {
    if k == 0 {
        return Err(Error::InvalidArgument("crop factor must be positive".into()));
    }
    let (h, w) = img.dims();
    if h < k || w < k {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            requirement: format!("at least {k} pixels per side"),
        });
    }
    let (nh, nw) = (h - h % k, w - w % k);
    img.crop((h - nh) / 2, (w - nw) / 2, nh, nw)
}

/// Reads an 8-bit grayscale or RGB raster. RGB is collapsed to luminance with
/// BT.601 weights.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = image::guess_format(&bytes)
        .ok()
        .filter(|f| matches!(f, image::ImageFormat::Png | image::ImageFormat::Pnm))
        .ok_or_else(|| Error::UnsupportedFormat(path.to_path_buf()))?;
    let decoded = image::load_from_memory_with_format(&bytes, format).map_err(|e| {
        Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    use image::DynamicImage as D;
    let data: Vec<f64> = match decoded {
        D::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        D::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        D::ImageRgb8(buf) => buf.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect(),
        D::ImageRgba8(buf) => buf.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect(),
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    ImageGrid::new(height, width, data)
}

fn luminance(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
}

/// Round-half-up quantization of a `[0, 1]` intensity to an 8-bit code.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Writes an 8-bit grayscale raster. The format follows the extension:
/// `.pgm` gives binary P5, anything else PNG.
pub fn save_image(img: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize_u8(v)).collect();
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
        out.extend_from_slice(&bytes);
        return std::fs::write(path, out).map_err(|e| Error::io(path, e));
    }
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, bytes)
        .expect("buffer length matches dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other.to_string())),
        })
}
