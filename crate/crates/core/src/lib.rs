//! Super-resolution of noisy grayscale images that preserves the noise
//! distribution of the input.
//!
//! The crate covers the whole pipeline: synthetic noise and decimation to
//! build training triplets, classical interpolation baselines, a wide
//! activation residual network trained with a noise log-likelihood term,
//! and full-reference quality metrics for evaluation.

pub mod error;
pub mod image;
pub mod metrics;
pub mod net;
pub mod noise;
pub mod pipeline;
pub mod resample;
pub mod train;

pub use error::{Error, Result};
pub use image::{ImageGrid, NormalizationStats};
pub use metrics::{FsimParams, MetricReport, SsimParams};
pub use net::{Boundary, Checkpoint, NetworkConfig, ParameterSet};
pub use noise::{Histogram, NoiseKind, NoiseSpec};
pub use pipeline::{DatasetManifest, ExperimentReport, Method, Split, SplitSizes};
pub use resample::SamplingFactor;
pub use train::{FitMode, LossBreakdown, TrainConfig, TrainingTrace};
