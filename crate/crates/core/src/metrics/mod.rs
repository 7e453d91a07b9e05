//! Full-reference quality metrics between a reference `n` and a candidate `p`.
//!
//! Inputs are `[0, 1]` images; every metric clips and rescales them to the
//! 8-bit range `[0, 255]` before evaluation so values are comparable with
//! published tables.

pub mod fsim;
pub mod pointwise;
pub mod ssim;

use std::fmt::Write as _;

pub use fsim::{fsim, fsim_from_maps, gradient_magnitude_raw, phase_congruency, FilterBank, FsimParams};
pub use pointwise::{mse, ncc, nrmse, psnr, uiq, uiq_windowed};
pub use ssim::{ssim, ssim_map, SsimParams};

use crate::error::Result;
use crate::image::ImageGrid;

pub(crate) fn to_255(n: &ImageGrid, p: &ImageGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    n.check_same_dims(p)?;
    let scale = |img: &ImageGrid| img.data().iter().map(|v| v.clamp(0.0, 1.0) * 255.0).collect();
    Ok((scale(n), scale(p)))
}

/// The seven metrics for one (reference, candidate) pair. `psnr` is
/// `f64::INFINITY` for identical images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    pub nrmse: f64,
    pub ncc: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub fsim: f64,
    pub uiq: f64,
}

/// Metric names in report column order.
pub const METRIC_NAMES: [&str; 7] = ["mse", "nrmse", "ncc", "psnr", "ssim", "fsim", "uiq"];

impl MetricReport {
    pub fn identical(&self) -> bool {
        self.psnr == f64::INFINITY
    }

    pub fn values(&self) -> [f64; 7] {
        [self.mse, self.nrmse, self.ncc, self.psnr, self.ssim, self.fsim, self.uiq]
    }

    pub fn from_values(v: [f64; 7]) -> Self {
        Self {
            mse: v[0],
            nrmse: v[1],
            ncc: v[2],
            psnr: v[3],
            ssim: v[4],
            fsim: v[5],
            uiq: v[6],
        }
    }

    /// Field-wise arithmetic mean. An infinite PSNR in any row makes the
    /// mean PSNR infinite.
    pub fn mean<'a>(reports: impl IntoIterator<Item = &'a MetricReport>) -> Option<MetricReport> {
        let mut sums = [0.0; 7];
        let mut count = 0usize;
        for r in reports {
            for (s, v) in sums.iter_mut().zip(r.values()) {
                *s += v;
            }
            count += 1;
        }
        (count > 0).then(|| MetricReport::from_values(sums.map(|s| s / count as f64)))
    }

    /// Comma-separated values in [`METRIC_NAMES`] order, `inf` for the PSNR
    /// sentinel.
    pub fn csv_fields(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.values().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_metric(*v));
        }
        out
    }
}

pub fn format_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn parse_metric(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

pub fn evaluate_all(
    n: &ImageGrid,
    p: &ImageGrid,
    ssim_params: &SsimParams,
    fsim_params: &FsimParams,
) -> Result<MetricReport> {
    Ok(MetricReport {
        mse: mse(n, p)?,
        nrmse: nrmse(n, p)?,
        ncc: ncc(n, p)?,
        psnr: psnr(n, p)?,
        ssim: ssim(n, p, ssim_params)?,
        fsim: fsim(n, p, fsim_params)?,
        uiq: uiq(n, p)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pair_is_perfect() {
        let x = ImageGrid::from_fn(24, 24, |r, c| ((r * 5 + c * 3) % 17) as f64 / 17.0).unwrap();
        let rep = evaluate_all(&x, &x, &SsimParams::default(), &FsimParams::default()).unwrap();
        assert_eq!(rep.mse, 0.0);
        assert_eq!(rep.nrmse, 0.0);
        assert!((rep.ncc - 1.0).abs() < 1e-12);
        assert!(rep.identical());
        assert!((rep.ssim - 1.0).abs() < 1e-12);
        assert!((rep.fsim - 1.0).abs() < 1e-12);
        assert!((rep.uiq - 1.0).abs() < 1e-12);
        assert!(rep.csv_fields().contains(",inf,"));
    }

    #[test]
    fn metric_text_round_trip() {
        for v in [0.1, 304.11, f64::INFINITY, -2.5] {
            assert_eq!(parse_metric(&format_metric(v)), Some(v));
        }
        assert_eq!(parse_metric("x"), None);
    }

    #[test]
    fn mean_of_reports() {
        let a = MetricReport::from_values([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let b = MetricReport::from_values([3.0, 2.0, 1.0, f64::INFINITY, 1.0, 0.0, 1.0]);
        let m = MetricReport::mean([&a, &b]).unwrap();
        assert_eq!(m.values(), [2.0, 2.0, 2.0, f64::INFINITY, 3.0, 3.0, 4.0]);
        assert!(MetricReport::mean(std::iter::empty()).is_none());
    }
}
