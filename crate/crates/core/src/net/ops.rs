//! Convolution kernels on single images laid out as `channels x height x width`.

use super::real::{gemm, Mat, Real};
use super::Boundary;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Plane {
    pub height: usize,
    pub width: usize,
}

impl Plane {
    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

/// Boundary-mapped source index of every `(offset, position)` pair along one axis.
fn tap_indices(n: usize, ks: usize, boundary: Boundary) -> Vec<usize> {
    let pad = (ks / 2) as isize;
    let mut out = Vec::with_capacity(ks * n);
    for d in 0..ks as isize {
        for i in 0..n as isize {
            out.push(boundary.index(i + d - pad, n));
        }
    }
    out
}

/// Unfolds `x` into a `(cin * ks * ks) x (h * w)` patch matrix.
fn im2col<T: Real>(x: &[T], cin: usize, plane: Plane, ks: usize, boundary: Boundary, col: &mut Vec<T>) {
    let (h, w) = (plane.height, plane.width);
    let rows = tap_indices(h, ks, boundary);
    let cols = tap_indices(w, ks, boundary);
    col.clear();
    col.reserve(cin * ks * ks * h * w);
    for c in 0..cin {
        let src = &x[c * h * w..(c + 1) * h * w];
        for dy in 0..ks {
            for dx in 0..ks {
                let cmap = &cols[dx * w..(dx + 1) * w];
                for y in 0..h {
                    let row = &src[rows[dy * h + y] * w..][..w];
                    col.extend(cmap.iter().map(|&xi| row[xi]));
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto `dx`.
fn col2im<T: Real>(dcol: &[T], cin: usize, plane: Plane, ks: usize, boundary: Boundary, dx: &mut [T]) {
    let (h, w) = (plane.height, plane.width);
    let rows = tap_indices(h, ks, boundary);
    let cols = tap_indices(w, ks, boundary);
    let mut k = 0;
    for c in 0..cin {
        let dst = &mut dx[c * h * w..(c + 1) * h * w];
        for dy in 0..ks {
            for dxo in 0..ks {
                let cmap = &cols[dxo * w..(dxo + 1) * w];
                for y in 0..h {
                    let base = rows[dy * h + y] * w;
                    let src = &dcol[k..k + w];
                    for (&xi, &g) in cmap.iter().zip(src) {
                        dst[base + xi] = dst[base + xi] + g;
                    }
                    k += w;
                }
            }
        }
    }
}

/// Same-size convolution: `weights` is `cout x (cin * ks * ks)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_forward<T: Real>(
    x: &[T],
    cin: usize,
    cout: usize,
    plane: Plane,
    ks: usize,
    weights: &[T],
    bias: &[T],
    boundary: Boundary,
) -> Vec<T> {
    let hw = plane.area();
    let k = cin * ks * ks;
    let mut col = Vec::new();
    im2col(x, cin, plane, ks, boundary, &mut col);
    let mut out = Vec::with_capacity(cout * hw);
    for &b in bias {
        out.extend(std::iter::repeat_n(b, hw));
    }
    gemm(Mat::new(weights, cout, k), false, Mat::new(&col, k, hw), false, T::one(), &mut out);
    out
}

/// Accumulates weight and bias gradients and, when requested, the input
/// gradient of [`conv_forward`].
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward<T: Real>(
    x: &[T],
    cin: usize,
    cout: usize,
    plane: Plane,
    ks: usize,
    weights: &[T],
    boundary: Boundary,
    dout: &[T],
    dweights: &mut [T],
    dbias: &mut [T],
    dx: Option<&mut [T]>,
) {
    let hw = plane.area();
    let k = cin * ks * ks;
    let mut col = Vec::new();
    im2col(x, cin, plane, ks, boundary, &mut col);
    gemm(Mat::new(dout, cout, hw), false, Mat::new(&col, k, hw), true, T::one(), dweights);
    for (db, row) in dbias.iter_mut().zip(dout.chunks(hw)) {
        *db = *db + row.iter().copied().sum::<T>();
    }
    if let Some(dx) = dx {
        // reuse the patch buffer for the patch gradient
        gemm(Mat::new(weights, cout, k), true, Mat::new(dout, cout, hw), false, T::zero(), &mut col);
        col2im(&col, cin, plane, ks, boundary, dx);
    }
}

/// Transposed convolution with stride `k` and a `2k x 2k` kernel onto one
/// output channel. Output pixel `k i + r` (per axis) combines input pixels
/// `i` (tap `r + k`) and `i + 1` (tap `r`).
pub(crate) fn transposed_forward<T: Real>(
    x: &[T],
    cin: usize,
    plane: Plane,
    k: usize,
    weights: &[T],
    bias: T,
    boundary: Boundary,
) -> Vec<T> {
    let (h, w) = (plane.height, plane.width);
    let (oh, ow) = (h * k, w * k);
    let ksz = 2 * k;
    let mut out = vec![bias; oh * ow];
    for c in 0..cin {
        let src = &x[c * h * w..(c + 1) * h * w];
        let wc = &weights[c * ksz * ksz..(c + 1) * ksz * ksz];
        for oy in 0..oh {
            let (iy, ry) = (oy / k, oy % k);
            let r0 = iy * w;
            let r1 = boundary.index(iy as isize + 1, h) * w;
            let w0 = &wc[(ry + k) * ksz..][..ksz];
            let w1 = &wc[ry * ksz..][..ksz];
            let dst = &mut out[oy * ow..(oy + 1) * ow];
            for (ox, o) in dst.iter_mut().enumerate() {
                let (ix, rx) = (ox / k, ox % k);
                let ix1 = boundary.index(ix as isize + 1, w);
                *o = *o
                    + src[r0 + ix] * w0[rx + k]
                    + src[r0 + ix1] * w0[rx]
                    + src[r1 + ix] * w1[rx + k]
                    + src[r1 + ix1] * w1[rx];
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn transposed_backward<T: Real>(
    x: &[T],
    cin: usize,
    plane: Plane,
    k: usize,
    weights: &[T],
    boundary: Boundary,
    dout: &[T],
    dweights: &mut [T],
    dbias: &mut T,
    dx: &mut [T],
) {
    let (h, w) = (plane.height, plane.width);
    let (oh, ow) = (h * k, w * k);
    let ksz = 2 * k;
    *dbias = *dbias + dout.iter().copied().sum::<T>();
    for c in 0..cin {
        let src = &x[c * h * w..(c + 1) * h * w];
        let wc = &weights[c * ksz * ksz..(c + 1) * ksz * ksz];
        let dwc = &mut dweights[c * ksz * ksz..(c + 1) * ksz * ksz];
        let dxc = &mut dx[c * h * w..(c + 1) * h * w];
        for oy in 0..oh {
            let (iy, ry) = (oy / k, oy % k);
            let r0 = iy * w;
            let r1 = boundary.index(iy as isize + 1, h) * w;
            let (t0, t1) = ((ry + k) * ksz, ry * ksz);
            for ox in 0..ow {
                let g = dout[oy * ow + ox];
                let (ix, rx) = (ox / k, ox % k);
                let ix1 = boundary.index(ix as isize + 1, w);
                let taps = [
                    (r0 + ix, t0 + rx + k),
                    (r0 + ix1, t0 + rx),
                    (r1 + ix, t1 + rx + k),
                    (r1 + ix1, t1 + rx),
                ];
                for (xi, wi) in taps {
                    dwc[wi] = dwc[wi] + g * src[xi];
                    dxc[xi] = dxc[xi] + g * wc[wi];
                }
            }
        }
    }
}
