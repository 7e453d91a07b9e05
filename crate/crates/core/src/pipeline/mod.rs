//! Dataset construction, evaluation against interpolation baselines and
//! report formatting.

mod config;
mod dataset;
mod evaluate;
mod manifest;
mod report;
pub mod synth;

pub use config::{load_config, parse_config};
pub use dataset::{
    build_dataset, list_images, load_split, load_training_set, load_triplet, verify_manifest, DatasetOptions,
};
pub use evaluate::{
    evaluate, histogram_pair, histogram_summary, upsample_with, EvalRow, ExperimentReport, Method, REPORT_HEADER,
};
pub use manifest::{DatasetManifest, ManifestRecord, Split, SplitSizes};
pub use report::{lower_is_better, parse_report_csv, ReportRow, ReportTable};
