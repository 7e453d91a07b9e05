//! Noise-aware training: loss, optimizer, early stopping and the epoch loop.

mod adam;
mod early_stop;
mod loss;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use early_stop::{EarlyStopping, StopDecision, MIN_IMPROVEMENT};
pub use loss::{loss, loss_and_gradient, loss_with, FitMode, LossBreakdown};

use crate::error::{Error, Result};
use crate::image::{ImageGrid, NormalizationStats};
use crate::net::{backward, forward, forward_raw, init, Checkpoint, NetworkConfig, ParameterSet, TrainingMeta};
use crate::noise::NoiseSpec;
use crate::resample::SamplingFactor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Weight of the log-likelihood term; must not be positive.
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    /// Side of the square high-resolution training crop; 0 trains on whole images.
    pub patch_size: usize,
    /// Crops drawn from each training image per epoch.
    pub patches_per_image: usize,
    pub fit_mode: FitMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: -10.0,
            learning_rate: 1e-3,
            max_epochs: 60,
            patience: 10,
            batch_size: 8,
            patch_size: 64,
            patches_per_image: 1,
            fit_mode: FitMode::Rms,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.max_epochs == 0 {
            return bad("at least one epoch is required");
        }
        if self.patience == 0 {
            return bad("patience must be at least one epoch");
        }
        if self.batch_size == 0 || self.patches_per_image == 0 {
            return bad("batch size and patches per image must be positive");
        }
        if !(self.lambda <= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and not positive");
        }
        Ok(())
    }
}

/// Ground truth, noisy target and low-resolution input of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub id: String,
    pub ground_truth: ImageGrid,
    pub noisy: ImageGrid,
    pub low_res: ImageGrid,
}

impl Triplet {
    pub fn check(&self, factor: SamplingFactor) -> Result<()> {
        self.ground_truth.check_same_dims(&self.noisy)?;
        let k = factor.get();
        let (h, w) = self.noisy.dims();
        let (lh, lw) = self.low_res.dims();
        if lh * k != h || lw * k != w {
            return Err(Error::DimensionMismatch { left_h: lh * k, left_w: lw * k, right_h: h, right_w: w });
        }
        Ok(())
    }

    /// Crop aligned to the decimation grid; `top` and `left` are in
    /// low-resolution pixels.
    fn crop(&self, top: usize, left: usize, lr_size: (usize, usize), k: usize) -> Result<Triplet> {
        let (lh, lw) = lr_size;
        Ok(Triplet {
            id: self.id.clone(),
            ground_truth: self.ground_truth.crop(top * k, left * k, lh * k, lw * k)?,
            noisy: self.noisy.crop(top * k, left * k, lh * k, lw * k)?,
            low_res: self.low_res.crop(top, left, lh, lw)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub spec: NoiseSpec,
    pub factor: SamplingFactor,
    pub stats: NormalizationStats,
    pub train: Vec<Triplet>,
    pub val: Vec<Triplet>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub fit_train: f64,
    pub noise_train: f64,
    pub fit_val: f64,
    pub noise_val: f64,
    pub total_val: f64,
    /// Lowest validation total up to and including this epoch.
    pub best_so_far: f64,
}

impl EpochRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.epoch, self.fit_train, self.noise_train, self.fit_val, self.noise_val, self.total_val, self.best_so_far
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    pub records: Vec<EpochRecord>,
}

impl TrainingTrace {
    pub const HEADER: &'static str = "epoch,fit_train,noise_train,fit_val,noise_val,total_val,best_so_far";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.csv_line());
        }
        out
    }
}

/// Untrained network wrapped as a checkpoint.
pub fn initial_checkpoint(net: &NetworkConfig, stats: NormalizationStats) -> Result<Checkpoint> {
    Ok(Checkpoint { params: init(net)?, stats, meta: TrainingMeta::default() })
}

pub fn predict(ckpt: &Checkpoint, l: &ImageGrid) -> Result<ImageGrid> {
    forward(&ckpt.params, &ckpt.stats, l)
}

pub fn train(data: &TrainingSet, net: &NetworkConfig, cfg: &TrainConfig) -> Result<(Checkpoint, TrainingTrace)> {
    train_with_progress(data, net, cfg, |_| {})
}

/// Trains and calls `progress` after every epoch.
pub fn train_with_progress(
    data: &TrainingSet,
    net: &NetworkConfig,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<(Checkpoint, TrainingTrace)> {
    cfg.validate()?;
    net.validate()?;
    if net.factor != data.factor {
        return Err(Error::ConfigMismatch(format!(
            "network upsamples by {}, dataset by {}",
            net.factor, data.factor
        )));
    }
    if data.train.is_empty() {
        return Err(Error::Empty("training split".into()));
    }
    if data.val.is_empty() {
        return Err(Error::Empty("validation split".into()));
    }
    let k = data.factor.get();
    for t in data.train.iter().chain(&data.val) {
        t.check(data.factor)?;
        let (lh, lw) = t.low_res.dims();
        if lh < net.kernel_size || lw < net.kernel_size {
            return Err(Error::TooSmall {
                height: t.noisy.height(),
                width: t.noisy.width(),
                requirement: format!("image {} is smaller than the network kernel", t.id),
            });
        }
    }
    let lr_patch = cfg.patch_size / k;
    if cfg.patch_size > 0 && (!cfg.patch_size.is_multiple_of(k) || lr_patch < net.kernel_size) {
        return Err(Error::InvalidArgument(format!(
            "patch size {} must be a multiple of {k} covering the kernel",
            cfg.patch_size
        )));
    }

    let mut params = init::<f32>(net)?;
    let mut adam = AdamState::new(params.len());
    let adam_cfg = AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut trace = TrainingTrace::default();
    let snapshot_meta = |epoch: usize, r: &EpochRecord| TrainingMeta {
        epoch,
        train_fit: r.fit_train,
        train_noise: r.noise_train,
        val_fit: r.fit_val,
        val_noise: r.noise_val,
        val_total: r.total_val,
    };

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..data.train.len()).flat_map(|i| std::iter::repeat_n(i, cfg.patches_per_image)).collect();
        order.shuffle(&mut rng);
        let samples = order
            .iter()
            .map(|&i| {
                let t = &data.train[i];
                let (lh, lw) = t.low_res.dims();
                if cfg.patch_size == 0 {
                    return Ok(t.clone());
                }
                let (ph, pw) = (lr_patch.min(lh), lr_patch.min(lw));
                let top = rng.random_range(0..=lh - ph);
                let left = rng.random_range(0..=lw - pw);
                t.crop(top, left, (ph, pw), k)
            })
            .collect::<Result<Vec<_>>>()?;

        let (mut fit_sum, mut noise_sum) = (0.0, 0.0);
        for (batch_idx, batch) in samples.chunks(cfg.batch_size).enumerate() {
            let results = batch
                .par_iter()
                .map(|s| sample_gradient(&params, &data.stats, s, &data.spec, cfg))
                .collect::<Vec<_>>();
            let mut grad = vec![0.0f64; params.len()];
            for r in results {
                let (lb, g) = r?;
                if !lb.is_finite() {
                    return Err(Error::NonFinite(format!("training loss at epoch {epoch}, batch {}", batch_idx + 1)));
                }
                fit_sum += lb.fit_term;
                noise_sum += lb.noise_term;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b as f64;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            let grad: Vec<f32> = grad.into_iter().map(|g| (g * scale) as f32).collect();
            adam_step(params.data_mut(), &grad, &mut adam, &adam_cfg).map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("{m} at epoch {epoch}, batch {}", batch_idx + 1)),
                other => other,
            })?;
        }

        let val = evaluate_loss(&params, &data.stats, &data.val, &data.spec, cfg)?;
        if !val.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        let count = samples.len() as f64;
        let best_so_far = trace.records.last().map_or(val.total, |r: &EpochRecord| r.best_so_far.min(val.total));
        let record = EpochRecord {
            epoch,
            fit_train: fit_sum / count,
            noise_train: noise_sum / count,
            fit_val: val.fit_term,
            noise_val: val.noise_term,
            total_val: val.total,
            best_so_far,
        };
        trace.records.push(record);
        progress(&record);
        let decision = stopper.observe(epoch, val.total, || (params.clone(), snapshot_meta(epoch, &record)));
        if decision == StopDecision::Stop {
            break;
        }
    }

    let (_, _, (params, meta)) = stopper.into_best().expect("at least one epoch ran");
    Ok((Checkpoint { params, stats: data.stats, meta }, trace))
}

fn sample_gradient(
    params: &ParameterSet<f32>,
    stats: &NormalizationStats,
    s: &Triplet,
    spec: &NoiseSpec,
    cfg: &TrainConfig,
) -> Result<(LossBreakdown, Vec<f32>)> {
    let acts = forward_raw(params, stats, &s.low_res)?;
    let p: Vec<f64> = acts.output().iter().map(|&v| v as f64).collect();
    let (lb, dp) = loss_and_gradient(&p, s.noisy.data(), s.ground_truth.data(), spec, cfg.lambda, cfg.fit_mode)?;
    let dp: Vec<f32> = dp.into_iter().map(|v| v as f32).collect();
    Ok((lb, backward(params, &acts, &dp)))
}

/// Mean loss of the unclipped prediction over whole images.
pub fn evaluate_loss(
    params: &ParameterSet<f32>,
    stats: &NormalizationStats,
    set: &[Triplet],
    spec: &NoiseSpec,
    cfg: &TrainConfig,
) -> Result<LossBreakdown> {
    if set.is_empty() {
        return Err(Error::Empty("evaluation set".into()));
    }
    let parts = set
        .par_iter()
        .map(|t| {
            let acts = forward_raw(params, stats, &t.low_res)?;
            let (h, w) = t.noisy.dims();
            let p = ImageGrid::new(h, w, acts.output().iter().map(|&v| v as f64).collect())?;
            loss_with(&p, &t.noisy, &t.ground_truth, spec, cfg.lambda, cfg.fit_mode)
        })
        .collect::<Vec<_>>();
    let (mut fit, mut noise) = (0.0, 0.0);
    for p in parts {
        let lb = p?;
        fit += lb.fit_term;
        noise += lb.noise_term;
    }
    let n = set.len() as f64;
    Ok(LossBreakdown::compose(fit / n, noise / n, cfg.lambda))
}
