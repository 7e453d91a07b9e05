use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{DatasetManifest, ManifestRecord, Split, SplitSizes};
use crate::error::{Error, Result};
use crate::image::{center_crop_to_multiple, compute_dataset_stats, load_image, save_image};
use crate::noise::{apply_noise, NoiseSpec};
use crate::resample::{decimate, SamplingFactor};
use crate::train::{TrainingSet, Triplet};

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "pgm", "ppm", "pnm", "pbm"];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub spec: NoiseSpec,
    pub factor: SamplingFactor,
    pub seed: u64,
    pub splits: SplitSizes,
}

/// Readable raster files directly inside `dir`, sorted by name.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Per-image noise seed, decorrelated from the dataset seed and the index.
fn image_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds `(G, N, L)` triplets from the images in `src` and writes them with
/// a manifest (`manifest.csv`) under `out`.
pub fn build_dataset(src: impl AsRef<Path>, out: impl AsRef<Path>, opts: &DatasetOptions) -> Result<DatasetManifest> {
    let (src, out) = (src.as_ref(), out.as_ref());
    let mut files = list_images(src)?;
    let needed = opts.splits.total();
    if needed == 0 {
        return Err(Error::InvalidArgument("split sizes are all zero".into()));
    }
    if files.len() < needed {
        return Err(Error::InvalidArgument(format!(
            "{} holds {} images, splits {} need {needed}",
            src.display(),
            files.len(),
            opts.splits
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    files.shuffle(&mut rng);
    files.truncate(needed);

    let k = opts.factor.get();
    let dirs = ["ground_truth", "noisy", "low_res"];
    for d in dirs {
        fs::create_dir_all(out.join(d)).map_err(|e| Error::io(out.join(d), e))?;
    }
    let mut ids = HashSet::new();
    let mut records = Vec::with_capacity(needed);
    let mut train_inputs = Vec::new();
    for (i, file) in files.iter().enumerate() {
        let id = file.file_stem().and_then(|s| s.to_str()).unwrap_or("image").replace(',', "_");
        if !ids.insert(id.clone()) {
            return Err(Error::InvalidArgument(format!("two source images share the name '{id}'")));
        }
        let split = opts.splits.split_of(i).expect("index below total");
        let g = center_crop_to_multiple(&load_image(file)?, k)?;
        let rel = |d: &str| PathBuf::from(d).join(format!("{id}.png"));
        let record = ManifestRecord {
            image_id: id.clone(),
            split,
            ground_truth: rel(dirs[0]),
            noisy: rel(dirs[1]),
            low_res: rel(dirs[2]),
        };
        // store G first so every later stage sees the quantized values
        save_image(&g, out.join(&record.ground_truth))?;
        let g = load_image(out.join(&record.ground_truth))?;
        let n = apply_noise(&g, &opts.spec, image_seed(opts.seed, i));
        save_image(&n, out.join(&record.noisy))?;
        let l = decimate(&load_image(out.join(&record.noisy))?, opts.factor)?;
        save_image(&l, out.join(&record.low_res))?;
        if split == Split::Train {
            train_inputs.push(l);
        }
        records.push(record);
    }
    let stats = compute_dataset_stats(&train_inputs)?;
    let manifest = DatasetManifest { spec: opts.spec, factor: opts.factor, seed: opts.seed, stats, records };
    manifest.save(out.join("manifest.csv"))?;
    Ok(manifest)
}

/// Loads the images of one record, resolving paths against `root`.
pub fn load_triplet(root: impl AsRef<Path>, record: &ManifestRecord, factor: SamplingFactor) -> Result<Triplet> {
    let root = root.as_ref();
    let t = Triplet {
        id: record.image_id.clone(),
        ground_truth: load_image(root.join(&record.ground_truth))?,
        noisy: load_image(root.join(&record.noisy))?,
        low_res: load_image(root.join(&record.low_res))?,
    };
    t.check(factor)?;
    Ok(t)
}

pub fn load_split(root: impl AsRef<Path>, manifest: &DatasetManifest, split: Split) -> Result<Vec<Triplet>> {
    manifest.split(split).map(|r| load_triplet(root.as_ref(), r, manifest.factor)).collect()
}

pub fn load_training_set(root: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<TrainingSet> {
    let root = root.as_ref();
    Ok(TrainingSet {
        spec: manifest.spec,
        factor: manifest.factor,
        stats: manifest.stats,
        train: load_split(root, manifest, Split::Train)?,
        val: load_split(root, manifest, Split::Val)?,
    })
}

/// Errors unless every stored low-resolution image equals the decimated
/// noisy image.
pub fn verify_manifest(root: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    let root = root.as_ref();
    for r in &manifest.records {
        let n = load_image(root.join(&r.noisy))?;
        let l = load_image(root.join(&r.low_res))?;
        if decimate(&n, manifest.factor)? != l {
            return Err(Error::malformed("dataset", format!("{} is not the decimated noisy image", r.image_id)));
        }
    }
    Ok(())
}

