//! Seeded synthetic grayscale scenes used when no photo corpus is at hand.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{save_image, ImageGrid};

enum Shape {
    Disc { cy: f64, cx: f64, r: f64 },
    Rect { top: f64, left: f64, bottom: f64, right: f64 },
    Stripes { freq: f64, angle: f64, cy: f64, cx: f64, r: f64 },
}

/// A scene of smooth shading, flat shapes and striped patches with
/// intensities kept inside `[0.1, 0.9]`.
pub fn desk_image(height: usize, width: usize, seed: u64) -> Result<ImageGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (height as f64, width as f64);
    let base = rng.random_range(0.3..0.7);
    let (gy, gx) = (rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
    let count = rng.random_range(4..9);
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let level = rng.random_range(0.15..0.85);
        let shape = match rng.random_range(0..3) {
            0 => Shape::Disc {
                cy: rng.random_range(0.0..h),
                cx: rng.random_range(0.0..w),
                r: rng.random_range(0.05..0.25) * h.min(w),
            },
            1 => {
                let (top, left) = (rng.random_range(0.0..h), rng.random_range(0.0..w));
                Shape::Rect {
                    top,
                    left,
                    bottom: top + rng.random_range(0.1..0.4) * h,
                    right: left + rng.random_range(0.1..0.4) * w,
                }
            }
            _ => Shape::Stripes {
                freq: rng.random_range(0.15..0.6),
                angle: rng.random_range(0.0..std::f64::consts::PI),
                cy: rng.random_range(0.0..h),
                cx: rng.random_range(0.0..w),
                r: rng.random_range(0.1..0.3) * h.min(w),
            },
        };
        shapes.push((shape, level));
    }
    let raw = ImageGrid::from_fn(height, width, |r, c| {
        let (y, x) = (r as f64, c as f64);
        let mut v = base + gy * (y / h - 0.5) + gx * (x / w - 0.5);
        for (shape, level) in &shapes {
            match *shape {
                Shape::Disc { cy, cx, r } => {
                    if (y - cy).hypot(x - cx) <= r {
                        v = *level;
                    }
                }
                Shape::Rect { top, left, bottom, right } => {
                    if y >= top && y < bottom && x >= left && x < right {
                        v = *level;
                    }
                }
                Shape::Stripes { freq, angle, cy, cx, r } => {
                    if (y - cy).hypot(x - cx) <= r {
                        let t = (x * angle.cos() + y * angle.sin()) * freq;
                        v = level + 0.12 * t.sin();
                    }
                }
            }
        }
        v
    })?;
    // light 3x3 box blur softens the hard edges
    let blurred = ImageGrid::from_fn(height, width, |r, c| {
        let mut acc = 0.0;
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let rr = (r as isize + dy).clamp(0, height as isize - 1) as usize;
                let cc = (c as isize + dx).clamp(0, width as isize - 1) as usize;
                acc += raw.get(rr, cc);
            }
        }
        (acc / 9.0).clamp(0.1, 0.9)
    })?;
    Ok(blurred)
}

/// Writes `count` desk images named `desk_000.png`, ... into `dir`.
pub fn write_desk_corpus(dir: impl AsRef<Path>, count: usize, size: usize, seed: u64) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if size == 0 {
        return Err(Error::InvalidArgument("image size must be positive".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..count)
        .map(|i| {
            let path = dir.join(format!("desk_{i:03}.png"));
            save_image(&desk_image(size, size, seed.wrapping_add(i as u64))?, &path)?;
            Ok(path)
        })
        .collect()
}
