use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::dataset::load_triplet;
use super::manifest::{DatasetManifest, Split};
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::metrics::{evaluate_all, format_metric, FsimParams, MetricReport, SsimParams, METRIC_NAMES};
use crate::net::Checkpoint;
use crate::noise::{residual_range, Histogram};
use crate::resample::{upsample_bilinear, upsample_cc};
use crate::train::predict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// The trained network.
    Our,
    Cc,
    Bilinear,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Our, Method::Cc, Method::Bilinear];

    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Method = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("no methods given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Our => "our",
            Method::Cc => "cc",
            Method::Bilinear => "bilinear",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "our" => Ok(Method::Our),
            "cc" => Ok(Method::Cc),
            "bilinear" => Ok(Method::Bilinear),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub image_id: String,
    pub method: Method,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub methods: Vec<Method>,
    /// Manifest order, then method order.
    pub rows: Vec<EvalRow>,
    pub means: Vec<(Method, MetricReport)>,
    /// `N - G` of the test split.
    pub noisy_histogram: Histogram,
    /// `P - G` per method, on the same bin edges.
    pub histograms: Vec<(Method, Histogram)>,
}

pub const REPORT_HEADER: &str = "image_id,method,mse,nrmse,ncc,psnr,ssim,fsim,uiq";

impl ExperimentReport {
    pub fn report_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.image_id, r.method, r.metrics.csv_fields());
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("method,{}\n", METRIC_NAMES.join(","));
        for (m, r) in &self.means {
            let _ = writeln!(out, "{m},{}", r.csv_fields());
        }
        out
    }

    pub fn psnr_csv(&self, method: Method) -> String {
        let mut out = String::from("image_id,psnr\n");
        for r in self.rows.iter().filter(|r| r.method == method) {
            let _ = writeln!(out, "{},{}", r.image_id, format_metric(r.metrics.psnr));
        }
        out
    }

    /// Writes the report, per-method means, histograms and PSNR lists into
    /// `dir` and returns the written paths.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = vec![
            ("report.csv".to_string(), self.report_csv()),
            ("summary.csv".to_string(), self.summary_csv()),
            ("histogram_noisy.csv".to_string(), self.noisy_histogram.to_csv()),
        ];
        for (m, h) in &self.histograms {
            files.push((format!("histogram_{m}.csv"), h.to_csv()));
        }
        for &m in &self.methods {
            files.push((format!("psnr_{m}.csv"), self.psnr_csv(m)));
        }
        files
            .into_iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

/// Prediction of one method for a low-resolution input.
pub fn upsample_with(method: Method, l: &ImageGrid, manifest: &DatasetManifest, ckpt: Option<&Checkpoint>) -> Result<ImageGrid> {
    match method {
        Method::Our => {
            let ckpt = ckpt.ok_or_else(|| Error::InvalidArgument("method 'our' needs a checkpoint".into()))?;
            predict(ckpt, l)
        }
        Method::Cc => upsample_cc(l, manifest.factor),
        Method::Bilinear => upsample_bilinear(l, manifest.factor),
    }
}

/// Scores every method on the test split against the noisy targets.
pub fn evaluate(
    root: impl AsRef<Path>,
    manifest: &DatasetManifest,
    ckpt: Option<&Checkpoint>,
    methods: &[Method],
    bins: usize,
) -> Result<ExperimentReport> {
    let root = root.as_ref();
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods given".into()));
    }
    if methods.contains(&Method::Our) {
        let ckpt = ckpt.ok_or_else(|| Error::InvalidArgument("method 'our' needs a checkpoint".into()))?;
        ckpt.require_factor(manifest.factor)?;
    }
    let records: Vec<_> = manifest.split(Split::Test).collect();
    if records.is_empty() {
        return Err(Error::Empty("test split".into()));
    }
    let (ssim_params, fsim_params) = (SsimParams::default(), FsimParams::default());

    struct PerImage {
        rows: Vec<EvalRow>,
        noisy_residual: Vec<f64>,
        residuals: Vec<Vec<f64>>,
    }
    let per_image = records
        .par_iter()
        .map(|rec| -> Result<PerImage> {
            let t = load_triplet(root, rec, manifest.factor)?;
            let mut rows = Vec::with_capacity(methods.len());
            let mut residuals = Vec::with_capacity(methods.len());
            for &m in methods {
                let p = upsample_with(m, &t.low_res, manifest, ckpt)?;
                p.check_same_dims(&t.noisy)?;
                let metrics = evaluate_all(&t.noisy, &p, &ssim_params, &fsim_params)?;
                rows.push(EvalRow { image_id: rec.image_id.clone(), method: m, metrics });
                residuals.push(p.data().iter().zip(t.ground_truth.data()).map(|(a, b)| a - b).collect());
            }
            let noisy_residual = t.noisy.data().iter().zip(t.ground_truth.data()).map(|(a, b)| a - b).collect();
            Ok(PerImage { rows, noisy_residual, residuals })
        })
        .collect::<Vec<_>>();

    let mut rows = Vec::new();
    let mut noisy_residual = Vec::new();
    let mut residuals = vec![Vec::new(); methods.len()];
    for item in per_image {
        let item = item?;
        rows.extend(item.rows);
        noisy_residual.extend(item.noisy_residual);
        for (acc, r) in residuals.iter_mut().zip(item.residuals) {
            acc.extend(r);
        }
    }
    let means = methods
        .iter()
        .map(|&m| {
            let mean = MetricReport::mean(rows.iter().filter(|r| r.method == m).map(|r| &r.metrics));
            (m, mean.expect("test split is non-empty"))
        })
        .collect();
    let sigma = manifest.spec.sigma();
    let half = residuals.iter().fold(residual_range(&noisy_residual, sigma), |acc, r| acc.max(residual_range(r, sigma)));
    let noisy_histogram = Histogram::symmetric(&noisy_residual, half, bins)?;
    let histograms = methods
        .iter()
        .zip(&residuals)
        .map(|(&m, r)| Ok((m, Histogram::symmetric(r, half, bins)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { methods: methods.to_vec(), rows, means, noisy_histogram, histograms })
}

/// Histograms of `N - G` and `P - G` over shared bin edges.
pub fn histogram_pair(
    p: &ImageGrid,
    g: &ImageGrid,
    n: &ImageGrid,
    bins: usize,
    sigma: f64,
) -> Result<(Histogram, Histogram)> {
    p.check_same_dims(g)?;
    n.check_same_dims(g)?;
    let rn: Vec<f64> = n.data().iter().zip(g.data()).map(|(a, b)| a - b).collect();
    let rp: Vec<f64> = p.data().iter().zip(g.data()).map(|(a, b)| a - b).collect();
    let half = residual_range(&rn, sigma).max(residual_range(&rp, sigma));
    Ok((Histogram::symmetric(&rn, half, bins)?, Histogram::symmetric(&rp, half, bins)?))
}

pub fn histogram_summary(noisy: &Histogram, predicted: &Histogram) -> String {
    format!(
        "N-G mean={:.6} std={:.6} | P-G mean={:.6} std={:.6} | std ratio={:.4}",
        noisy.sample_mean,
        noisy.sample_std,
        predicted.sample_mean,
        predicted.sample_std,
        if noisy.sample_std > 0.0 { predicted.sample_std / noisy.sample_std } else { f64::NAN }
    )
}
