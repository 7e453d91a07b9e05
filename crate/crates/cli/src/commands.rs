use std::path::{Path, PathBuf};
use std::time::Instant;

use noisr_core::image::{load_image, save_image};
use noisr_core::net::{load_checkpoint, save_checkpoint, NetworkConfig};
use noisr_core::noise::DEFAULT_BINS;
use noisr_core::pipeline::{
    build_dataset, evaluate as run_evaluation, histogram_pair, histogram_summary, load_training_set, parse_report_csv,
    synth, DatasetManifest, DatasetOptions, Method, ReportTable,
};
use noisr_core::train::{predict as run_prediction, train_with_progress, TrainConfig, TrainingTrace};
use noisr_core::{Error, NoiseKind, NoiseSpec, SamplingFactor, SplitSizes};

use crate::settings::Settings;
use crate::{CliError, DatasetArgs, EvaluateArgs, HistogramArgs, PredictArgs, ReportArgs, SynthArgs, TrainArgs};

type CmdResult = Result<(), CliError>;

fn write_text(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.to_path_buf(), source: e })?;
    }
    std::fs::write(path, body).map_err(|e| Error::Io { path: path.to_path_buf(), source: e }.into())
}

fn manifest_root(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("manifest {} does not exist", path.display())));
    }
    Ok(DatasetManifest::load(path)?)
}

pub fn synth(a: SynthArgs, s: &Settings) -> CmdResult {
    let out: PathBuf = s.require(a.out, "out")?;
    let count = s.or(a.count, "count", 28)?;
    let size = s.or(a.size, "size", 128)?;
    let seed = s.or(a.seed, "seed", 0)?;
    let files = synth::write_desk_corpus(&out, count, size, seed)?;
    println!("wrote {} images of {size}x{size} to {}", files.len(), out.display());
    Ok(())
}

pub fn dataset(a: DatasetArgs, s: &Settings) -> CmdResult {
    let src: PathBuf = s.require(a.src, "src")?;
    let out: PathBuf = s.require(a.out, "out")?;
    let kind: NoiseKind = s.or(a.noise, "noise", "gaussian".to_string())?.parse()?;
    let sigma = s.or(a.sigma, "sigma", 0.02)?;
    let mu = s.or(a.mu, "mu", 0.0)?;
    let factor: SamplingFactor = s.or(a.factor, "factor", "2".to_string())?.parse()?;
    let seed = s.or(a.seed, "seed", 0)?;
    let splits: SplitSizes = s.or(a.splits, "splits", "400/70/30".to_string())?.parse()?;
    let spec = match kind {
        NoiseKind::Gaussian => NoiseSpec::gaussian(mu, sigma)?,
        NoiseKind::Speckle => NoiseSpec::speckle(sigma)?,
    };
    let m = build_dataset(&src, &out, &DatasetOptions { spec, factor, seed, splits })?;
    println!(
        "dataset {}: {} images ({splits}), {} noise sigma {}, factor {factor}, stats mean {} std {}",
        out.join("manifest.csv").display(),
        m.records.len(),
        m.spec.kind(),
        m.spec.sigma(),
        m.stats.mean,
        m.stats.std
    );
    Ok(())
}

pub fn train(a: TrainArgs, s: &Settings) -> CmdResult {
    let manifest_path: PathBuf = s.require(a.src, "src")?;
    let out: PathBuf = s.require(a.out, "out")?;
    let manifest = load_manifest(&manifest_path)?;
    let data = load_training_set(manifest_root(&manifest_path), &manifest)?;
    let seed = s.or(a.seed, "seed", 0)?;
    let mut net = NetworkConfig::for_factor(manifest.factor);
    net.seed = seed;
    if let Some(w) = s.opt(a.width, "width")? {
        net.width = w;
        net.skip_width = w;
    }
    net.num_blocks = s.or(a.blocks, "blocks", net.num_blocks)?;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        lambda: s.or(a.lambda, "lambda", d.lambda)?,
        learning_rate: s.or(a.learning_rate, "learning_rate", d.learning_rate)?,
        max_epochs: s.or(a.max_epochs, "max_epochs", d.max_epochs)?,
        patience: s.or(a.patience, "patience", d.patience)?,
        batch_size: s.or(a.batch_size, "batch_size", d.batch_size)?,
        patch_size: s.or(a.patch_size, "patch_size", d.patch_size)?,
        patches_per_image: s.or(a.patches_per_image, "patches_per_image", d.patches_per_image)?,
        fit_mode: s.or(a.fit, "fit", d.fit_mode.to_string())?.parse()?,
        seed,
    };
    println!("{}", TrainingTrace::HEADER);
    let (ckpt, trace) = train_with_progress(&data, &net, &cfg, |r| println!("{}", r.csv_line()))?;
    save_checkpoint(&ckpt, &out)?;
    let trace_path = out.with_extension("trace.csv");
    write_text(&trace_path, &trace.to_csv())?;
    println!(
        "best epoch {} (validation total {}), checkpoint {}, trace {}",
        ckpt.meta.epoch,
        ckpt.meta.val_total,
        out.display(),
        trace_path.display()
    );
    Ok(())
}

pub fn predict(a: PredictArgs, s: &Settings) -> CmdResult {
    let ckpt_path: PathBuf = s.require(a.checkpoint, "checkpoint")?;
    let src: PathBuf = s.require(a.src, "src")?;
    let out: PathBuf = s.require(a.out, "out")?;
    let ckpt = load_checkpoint(&ckpt_path)?;
    if let Some(f) = s.opt(a.factor, "factor")? {
        ckpt.require_factor(f.parse()?)?;
    }
    let l = load_image(&src)?;
    let start = Instant::now();
    let p = run_prediction(&ckpt, &l)?;
    let elapsed = start.elapsed();
    save_image(&p, &out)?;
    println!(
        "{}x{} -> {}x{} in {:.3} s, written to {}",
        l.height(),
        l.width(),
        p.height(),
        p.width(),
        elapsed.as_secs_f64(),
        out.display()
    );
    Ok(())
}

pub fn evaluate(a: EvaluateArgs, s: &Settings) -> CmdResult {
    let manifest_path: PathBuf = s.require(a.src, "src")?;
    let out: PathBuf = s.require(a.out, "out")?;
    let methods = Method::parse_list(&s.or(a.methods, "methods", "our,cc,bilinear".to_string())?)?;
    let bins = s.or(a.bins, "bins", DEFAULT_BINS)?;
    let manifest = load_manifest(&manifest_path)?;
    let ckpt = match s.opt(a.checkpoint, "checkpoint")? {
        Some(p) => Some(load_checkpoint(p)?),
        None => None,
    };
    let report = run_evaluation(manifest_root(&manifest_path), &manifest, ckpt.as_ref(), &methods, bins)?;
    report.write(&out)?;
    let names = report.means.iter().map(|(m, _)| m.to_string()).collect();
    let means: Vec<_> = report.means.iter().map(|(_, r)| *r).collect();
    print!("{}", ReportTable::from_means(names, &means).render());
    println!("noisy residual: mean {:.6} std {:.6}", report.noisy_histogram.sample_mean, report.noisy_histogram.sample_std);
    println!("outputs written to {}", out.display());
    Ok(())
}

pub fn histogram(a: HistogramArgs, s: &Settings) -> CmdResult {
    let p = load_image(s.require::<PathBuf>(a.prediction, "prediction")?)?;
    let g = load_image(s.require::<PathBuf>(a.ground_truth, "ground_truth")?)?;
    let n = load_image(s.require::<PathBuf>(a.noisy, "noisy")?)?;
    let bins = s.or(a.bins, "bins", DEFAULT_BINS)?;
    let sigma = s.or(a.sigma, "sigma", 0.02)?;
    let out: PathBuf = s.require(a.out, "out")?;
    let (hn, hp) = histogram_pair(&p, &g, &n, bins, sigma)?;
    write_text(&out.join("histogram_noisy.csv"), &hn.to_csv())?;
    write_text(&out.join("histogram_prediction.csv"), &hp.to_csv())?;
    println!("{}", histogram_summary(&hn, &hp));
    Ok(())
}

pub fn report(a: ReportArgs, s: &Settings) -> CmdResult {
    let mut files = a.src;
    if files.is_empty() {
        if let Some(list) = s.opt::<String>(None, "src")? {
            files = list.split(',').map(|p| PathBuf::from(p.trim())).collect();
        }
    }
    if files.is_empty() {
        return Err(CliError::Usage("report needs at least one --src CSV".into()));
    }
    let mut rows = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| Error::Io { path: f.clone(), source: e })?;
        rows.extend(parse_report_csv(&text)?);
    }
    let table = ReportTable::from_rows(&rows)?.render();
    print!("{table}");
    if let Some(out) = s.opt::<PathBuf>(a.out, "report_out")? {
        write_text(&out, &table)?;
    }
    Ok(())
}
