//! Binary checkpoint container, little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "NOISRNET"
//! version    u32
//! config     factor u32, kernel u32, blocks u32, width u32, expansion u32,
//!            skip width u32, boundary u8, seed u64
//! stats      mean f64, std f64
//! meta       epoch u32, train fit f64, train noise f64,
//!            val fit f64, val noise f64, val total f64
//! arrays     count u32, then per array:
//!            name length u32, name bytes, rank u32, dims u32 x rank,
//!            f32 x prod(dims)
//! ```

use std::fs;
use std::path::Path;

use super::params::ParameterSet;
use super::{Boundary, NetworkConfig};
use crate::error::{Error, Result};
use crate::image::NormalizationStats;
use crate::resample::SamplingFactor;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"NOISRNET";

/// Losses of the epoch a checkpoint was taken at.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainingMeta {
    /// 1-based; 0 for an untrained network.
    pub epoch: usize,
    pub train_fit: f64,
    pub train_noise: f64,
    pub val_fit: f64,
    pub val_noise: f64,
    pub val_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ParameterSet<f32>,
    pub stats: NormalizationStats,
    pub meta: TrainingMeta,
}

impl Checkpoint {
    pub fn config(&self) -> &NetworkConfig {
        self.params.config()
    }

    /// Errors unless the network upsamples by `factor`.
    pub fn require_factor(&self, factor: SamplingFactor) -> Result<()> {
        let own = self.config().factor;
        if own != factor {
            return Err(Error::ConfigMismatch(format!(
                "checkpoint upsamples by {own}, {factor} was requested"
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.config();
        let mut out = Vec::with_capacity(64 + self.params.len() * 4);
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, CHECKPOINT_VERSION);
        for v in [cfg.factor.get(), cfg.kernel_size, cfg.num_blocks, cfg.width, cfg.expansion, cfg.skip_width] {
            put_u32(&mut out, v as u32);
        }
        out.push(cfg.boundary.code());
        out.extend_from_slice(&cfg.seed.to_le_bytes());
        for v in [self.stats.mean, self.stats.std] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let m = &self.meta;
        put_u32(&mut out, m.epoch as u32);
        for v in [m.train_fit, m.train_noise, m.val_fit, m.val_noise, m.val_total] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let arrays = self.params.layout().arrays();
        put_u32(&mut out, arrays.len() as u32);
        for a in &arrays {
            put_u32(&mut out, a.name.len() as u32);
            out.extend_from_slice(a.name.as_bytes());
            put_u32(&mut out, a.dims.len() as u32);
            for &d in &a.dims {
                put_u32(&mut out, d as u32);
            }
            for v in &self.params.data()[a.offset..a.offset + a.len()] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::CorruptCheckpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch { found: version, expected: CHECKPOINT_VERSION });
        }
        let factor = SamplingFactor::new(r.u32()? as usize)
            .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let kernel_size = r.u32()? as usize;
        let num_blocks = r.u32()? as usize;
        let width = r.u32()? as usize;
        let expansion = r.u32()? as usize;
        let skip_width = r.u32()? as usize;
        let boundary = Boundary::from_code(r.u8()?)
            .ok_or_else(|| Error::CorruptCheckpoint("unknown boundary code".into()))?;
        let seed = r.u64()?;
        let config = NetworkConfig { factor, kernel_size, num_blocks, width, expansion, skip_width, boundary, seed };
        config.validate().map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        // guard against absurd sizes before allocating
        let widths = [kernel_size, num_blocks, width, expansion, skip_width];
        if widths.iter().any(|&v| v > 4096) {
            return Err(Error::CorruptCheckpoint("implausible network configuration".into()));
        }
        let stats = NormalizationStats::new(r.f64()?, r.f64()?)
            .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let epoch = r.u32()? as usize;
        let meta = TrainingMeta {
            epoch,
            train_fit: r.f64()?,
            train_noise: r.f64()?,
            val_fit: r.f64()?,
            val_noise: r.f64()?,
            val_total: r.f64()?,
        };

        let mut params = ParameterSet::<f32>::zeros(&config)?;
        let expected = params.layout().arrays();
        let count = r.u32()? as usize;
        if count != expected.len() {
            return Err(Error::ConfigMismatch(format!(
                "{count} arrays stored, configuration has {}",
                expected.len()
            )));
        }
        for spec in &expected {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::CorruptCheckpoint("array name is not UTF-8".into()))?;
            if name != spec.name {
                return Err(Error::ConfigMismatch(format!("expected array {}, found {name}", spec.name)));
            }
            let rank = r.u32()? as usize;
            if rank > 8 {
                return Err(Error::CorruptCheckpoint(format!("array {name} has rank {rank}")));
            }
            let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            if dims != spec.dims {
                return Err(Error::ConfigMismatch(format!(
                    "array {name} has shape {dims:?}, configuration needs {:?}",
                    spec.dims
                )));
            }
            let raw = r.take(spec.len() * 4)?;
            let dst = &mut params.data_mut()[spec.offset..spec.offset + spec.len()];
            for (d, chunk) in dst.iter_mut().zip(raw.chunks_exact(4)) {
                *d = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptCheckpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        if params.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::CorruptCheckpoint("non-finite parameter".into()));
        }
        Ok(Self { params, stats, meta })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::CorruptCheckpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
