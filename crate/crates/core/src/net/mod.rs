//! Wide-activation residual super-resolution network.
//!
//! Graph, for a low-resolution input `L` and factor `k`:
//!
//! ```text
//! x  = (L - mean) / std
//! h  = head(x)                                  conv 1 -> w
//! r  = h; repeat: r = r + project(relu(expand(r)))   w -> 4w -> w
//! up = transposed(tail(r) + h)                  conv w -> w, then w -> 1, stride k
//! sk = transposed'(skip(x))                     conv 1 -> w', then w' -> 1, stride k
//! P  = (up + sk) * std + mean
//! ```
//!
//! Every convolution is weight-normalized (`w = g v / |v|` per output
//! channel) and preserves spatial size with replicate padding.

mod checkpoint;
mod model;
mod ops;
mod params;
mod real;

use std::fmt;
use std::str::FromStr;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainingMeta, CHECKPOINT_VERSION};
pub use model::{backward, forward, forward_raw, Activations};
pub use params::{init, init_weight_norm_layer, RESIDUAL_INIT_GAIN, param_count, weight_norm_effective, ArraySpec, LayerKind, LayerSpec, Layout, ParameterSet};
pub use real::Real;

use crate::error::{Error, Result};
use crate::resample::SamplingFactor;

/// How convolutions read pixels outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Replicate,
    /// Wrap around; makes the network exactly translation covariant.
    Periodic,
}

impl Boundary {
    #[inline]
    pub(crate) fn index(self, i: isize, n: usize) -> usize {
        match self {
            Boundary::Replicate => i.clamp(0, n as isize - 1) as usize,
            Boundary::Periodic => i.rem_euclid(n as isize) as usize,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Boundary::Replicate => 0,
            Boundary::Periodic => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Boundary::Replicate),
            1 => Some(Boundary::Periodic),
            _ => None,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Replicate => "replicate",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "replicate" => Ok(Boundary::Replicate),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidArgument(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Architecture description; parameter shapes depend on nothing else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetworkConfig {
    pub factor: SamplingFactor,
    pub kernel_size: usize,
    pub num_blocks: usize,
    /// Feature channels of the residual body.
    pub width: usize,
    /// Channel multiplier inside each residual block, before the ReLU.
    pub expansion: usize,
    /// Feature channels of the skip branch.
    pub skip_width: usize,
    pub boundary: Boundary,
    pub seed: u64,
}

impl NetworkConfig {
    /// Default widths: 39 channels at 2X (3x3 kernels, 895,093 parameters)
    /// and 12 channels at 4X (5x5 kernels, 237,172 parameters).
    pub fn for_factor(factor: SamplingFactor) -> Self {
        let (kernel_size, width) = match factor.get() {
            2 => (3, 39),
            _ => (5, 12),
        };
        Self {
            factor,
            kernel_size,
            num_blocks: 8,
            width,
            expansion: 4,
            skip_width: width,
            boundary: Boundary::Replicate,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        if self.width == 0 || self.skip_width == 0 || self.expansion == 0 {
            return Err(Error::InvalidArgument("channel widths must be positive".into()));
        }
        if self.num_blocks == 0 {
            return Err(Error::InvalidArgument("at least one residual block is required".into()));
        }
        Ok(())
    }

    pub fn expanded(&self) -> usize {
        self.width * self.expansion
    }
}
