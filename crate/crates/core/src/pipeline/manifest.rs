use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::NormalizationStats;
use crate::noise::{NoiseKind, NoiseSpec};
use crate::resample::SamplingFactor;

const MAGIC: &str = "noisr-manifest 1";
const COLUMNS: &str = "image_id,split,ground_truth,noisy,low_res";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split '{other}'"))),
        }
    }
}

/// Image counts per split, written `train/val/test`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn split_of(&self, index: usize) -> Option<Split> {
        if index < self.train {
            Some(Split::Train)
        } else if index < self.train + self.val {
            Some(Split::Val)
        } else if index < self.total() {
            Some(Split::Test)
        } else {
            None
        }
    }
}

impl fmt::Display for SplitSizes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.train, self.val, self.test)
    }
}

impl FromStr for SplitSizes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('/').map(str::trim).collect();
        let parsed: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[train, val, test]) => Ok(Self { train, val, test }),
            _ => Err(Error::InvalidArgument(format!("splits must look like 400/70/30, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub image_id: String,
    pub split: Split,
    /// Relative to the manifest's directory.
    pub ground_truth: PathBuf,
    pub noisy: PathBuf,
    pub low_res: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub spec: NoiseSpec,
    pub factor: SamplingFactor,
    pub seed: u64,
    pub stats: NormalizationStats,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {MAGIC}\n");
        let _ = writeln!(out, "# noise = {}", self.spec.kind());
        let _ = writeln!(out, "# mu = {}", self.spec.mu());
        let _ = writeln!(out, "# sigma = {}", self.spec.sigma());
        let _ = writeln!(out, "# factor = {}", self.factor.get());
        let _ = writeln!(out, "# seed = {}", self.seed);
        let _ = writeln!(out, "# mean = {}", self.stats.mean);
        let _ = writeln!(out, "# std = {}", self.stats.std);
        out.push_str(COLUMNS);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.image_id,
                r.split,
                slash_path(&r.ground_truth),
                slash_path(&r.noisy),
                slash_path(&r.low_res)
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::malformed("manifest", msg);
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim_start_matches('#').trim() == MAGIC => {}
            _ => return Err(bad("missing manifest signature line".into())),
        }
        let mut header = std::collections::HashMap::new();
        let mut records = Vec::new();
        let mut seen_columns = false;
        for (no, line) in lines {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| bad(format!("line {}: header entry without '='", no + 1)))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            if !seen_columns {
                if line != COLUMNS {
                    return Err(bad(format!("line {}: expected column header '{COLUMNS}'", no + 1)));
                }
                seen_columns = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(bad(format!("line {}: expected 5 fields, found {}", no + 1, fields.len())));
            }
            records.push(ManifestRecord {
                image_id: fields[0].to_string(),
                split: fields[1].parse().map_err(|e: Error| bad(format!("line {}: {e}", no + 1)))?,
                ground_truth: PathBuf::from(fields[2]),
                noisy: PathBuf::from(fields[3]),
                low_res: PathBuf::from(fields[4]),
            });
        }
        if !seen_columns {
            return Err(bad("missing column header".into()));
        }
        let get = |key: &str| header.get(key).ok_or_else(|| bad(format!("header lacks '{key}'")));
        let num = |key: &str| -> Result<f64> {
            get(key)?.parse().map_err(|_| bad(format!("header '{key}' is not a number")))
        };
        let kind: NoiseKind = get("noise")?.parse()?;
        let spec = NoiseSpec::new(kind, num("mu")?, num("sigma")?)?;
        let factor: SamplingFactor = get("factor")?.parse()?;
        let seed = get("seed")?.parse().map_err(|_| bad("header 'seed' is not an integer".into()))?;
        let stats = NormalizationStats::new(num("mean")?, num("std")?)?;
        Ok(Self { spec, factor, seed, stats, records })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn slash_path(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}
