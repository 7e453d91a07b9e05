use super::ops::{conv_backward, conv_forward, transposed_backward, transposed_forward, Plane};
use super::params::{LayerKind, ParameterSet, HEAD};
use super::real::Real;
use crate::error::{Error, Result};
use crate::image::{ImageGrid, NormalizationStats};

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations<T> {
    plane: Plane,
    std: f64,
    weights: Vec<Vec<T>>,
    input: Vec<T>,
    /// Input of every residual block, then the output of the last one.
    residual: Vec<Vec<T>>,
    /// Expand-conv pre-activations per block.
    expanded: Vec<Vec<T>>,
    body: Vec<T>,
    skip: Vec<T>,
    output: Vec<T>,
}

impl<T: Real> Activations<T> {
    /// Unclipped prediction, `k H x k W`, row-major.
    pub fn output(&self) -> &[T] {
        &self.output
    }

    pub fn output_dims(&self, factor: usize) -> (usize, usize) {
        (self.plane.height * factor, self.plane.width * factor)
    }
}

fn conv_dims(kind: &LayerKind) -> (usize, usize, usize) {
    match *kind {
        LayerKind::Conv { inputs, outputs, kernel } => (inputs, outputs, kernel),
        LayerKind::Transposed { .. } => unreachable!("not a same-size convolution"),
    }
}

/// Forward pass without the final clipping; the result keeps everything the
/// backward pass needs.
pub fn forward_raw<T: Real>(
    params: &ParameterSet<T>,
    stats: &NormalizationStats,
    l: &ImageGrid,
) -> Result<Activations<T>> {
    let config = params.config();
    let (h, w) = l.dims();
    if h < config.kernel_size || w < config.kernel_size {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            requirement: format!("network input needs at least {} pixels per side", config.kernel_size),
        });
    }
    let stats = NormalizationStats::new(stats.mean, stats.std)?;
    let plane = Plane { height: h, width: w };
    let layout = params.layout();
    let data = params.data();
    let weights = params.effective_weights();
    let boundary = config.boundary;
    let k = config.factor.get();

    let conv = |idx: usize, x: &[T]| -> Vec<T> {
        let spec = &layout.layers[idx];
        let (cin, cout, ks) = conv_dims(&spec.kind);
        conv_forward(x, cin, cout, plane, ks, &weights[idx], &data[spec.b_range()], boundary)
    };
    let transposed = |idx: usize, x: &[T]| -> Vec<T> {
        let spec = &layout.layers[idx];
        let cin = match spec.kind {
            LayerKind::Transposed { inputs, .. } => inputs,
            LayerKind::Conv { .. } => unreachable!("not a transposed convolution"),
        };
        transposed_forward(x, cin, plane, k, &weights[idx], data[spec.b], boundary)
    };

    let (mean, std) = (T::of(stats.mean), T::of(stats.std));
    let input: Vec<T> = l.data().iter().map(|&v| (T::of(v) - mean) / std).collect();
    let head = conv(HEAD, &input);
    let mut residual = vec![head.clone()];
    let mut expanded = Vec::with_capacity(layout.num_blocks());
    for block in 0..layout.num_blocks() {
        let r = residual.last().expect("non-empty");
        let a = conv(layout.expand(block), r);
        let z: Vec<T> = a.iter().map(|&v| v.max(T::zero())).collect();
        let y = conv(layout.project(block), &z);
        let next: Vec<T> = r.iter().zip(&y).map(|(&a, &b)| a + b).collect();
        expanded.push(a);
        residual.push(next);
    }
    let tail = conv(layout.tail(), residual.last().expect("non-empty"));
    let body: Vec<T> = tail.iter().zip(&head).map(|(&a, &b)| a + b).collect();
    let up = transposed(layout.up(), &body);
    let skip = conv(layout.skip(), &input);
    let skip_up = transposed(layout.skip_up(), &skip);
    let output = up
        .iter()
        .zip(&skip_up)
        .map(|(&a, &b)| (a + b) * std + mean)
        .collect();
    Ok(Activations {
        plane,
        std: stats.std,
        weights,
        input,
        residual,
        expanded,
        body,
        skip,
        output,
    })
}

/// Prediction clipped to `[0, 1]`, `k H x k W`.
pub fn forward<T: Real>(
    params: &ParameterSet<T>,
    stats: &NormalizationStats,
    l: &ImageGrid,
) -> Result<ImageGrid> {
    let acts = forward_raw(params, stats, l)?;
    let (oh, ow) = acts.output_dims(params.config().factor.get());
    let data: Vec<f64> = acts.output.iter().map(|v| v.f64()).collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network output".into()));
    }
    Ok(ImageGrid::new(oh, ow, data)?.clipped())
}

/// Gradient of a scalar objective with respect to every parameter, given its
/// gradient `d_output` with respect to the unclipped prediction.
pub fn backward<T: Real>(params: &ParameterSet<T>, acts: &Activations<T>, d_output: &[T]) -> Vec<T> {
    assert_eq!(d_output.len(), acts.output.len(), "output gradient size");
    let config = params.config();
    let layout = params.layout();
    let plane = acts.plane;
    let boundary = config.boundary;
    let k = config.factor.get();
    let hw = plane.area();
    // gradient with respect to the effective weights, then mapped to v and g
    let mut d_weights: Vec<Vec<T>> = acts.weights.iter().map(|w| vec![T::zero(); w.len()]).collect();
    let mut grad = vec![T::zero(); params.len()];

    let std = T::of(acts.std);
    let d_out: Vec<T> = d_output.iter().map(|&g| g * std).collect();

    let transposed_back = |idx: usize, x: &[T], dw: &mut Vec<T>, grad: &mut [T]| -> Vec<T> {
        let spec = &layout.layers[idx];
        let cin = match spec.kind {
            LayerKind::Transposed { inputs, .. } => inputs,
            LayerKind::Conv { .. } => unreachable!("not a transposed convolution"),
        };
        let mut dx = vec![T::zero(); cin * hw];
        let mut db = T::zero();
        transposed_backward(x, cin, plane, k, &acts.weights[idx], boundary, &d_out, dw, &mut db, &mut dx);
        grad[spec.b] = grad[spec.b] + db;
        dx
    };
    let conv_back = |idx: usize, x: &[T], dy: &[T], dw: &mut Vec<T>, grad: &mut [T], want_dx: bool| -> Vec<T> {
        let spec = &layout.layers[idx];
        let (cin, cout, ks) = conv_dims(&spec.kind);
        let mut dx = if want_dx { vec![T::zero(); cin * hw] } else { Vec::new() };
        let db = &mut grad[spec.b_range()];
        conv_backward(
            x,
            cin,
            cout,
            plane,
            ks,
            &acts.weights[idx],
            boundary,
            dy,
            dw,
            db,
            want_dx.then_some(dx.as_mut_slice()),
        );
        dx
    };

    // skip branch
    let d_skip = transposed_back(layout.skip_up(), &acts.skip, &mut d_weights[layout.skip_up()], &mut grad);
    conv_back(layout.skip(), &acts.input, &d_skip, &mut d_weights[layout.skip()], &mut grad, false);

    // main branch
    let d_body = transposed_back(layout.up(), &acts.body, &mut d_weights[layout.up()], &mut grad);
    let last = acts.residual.last().expect("non-empty");
    let mut d_res = conv_back(layout.tail(), last, &d_body, &mut d_weights[layout.tail()], &mut grad, true);
    for block in (0..layout.num_blocks()).rev() {
        let pre = &acts.expanded[block];
        let z: Vec<T> = pre.iter().map(|&v| v.max(T::zero())).collect();
        let mut d_z = conv_back(layout.project(block), &z, &d_res, &mut d_weights[layout.project(block)], &mut grad, true);
        for (dz, &a) in d_z.iter_mut().zip(pre) {
            if a <= T::zero() {
                *dz = T::zero();
            }
        }
        let d_in = conv_back(
            layout.expand(block),
            &acts.residual[block],
            &d_z,
            &mut d_weights[layout.expand(block)],
            &mut grad,
            true,
        );
        for (d, g) in d_res.iter_mut().zip(d_in) {
            *d = *d + g;
        }
    }
    for (d, &g) in d_res.iter_mut().zip(&d_body) {
        *d = *d + g;
    }
    conv_back(HEAD, &acts.input, &d_res, &mut d_weights[HEAD], &mut grad, false);

    // weight normalization: w = g v / |v|
    let data = params.data();
    for (spec, dw) in layout.layers.iter().zip(&d_weights) {
        let fan = spec.kind.fan();
        let v = &data[spec.v_range()];
        let g = &data[spec.g_range()];
        for (o, (v_row, dw_row)) in v.chunks(fan).zip(dw.chunks(fan)).enumerate() {
            let norm = v_row.iter().map(|&x| x.f64() * x.f64()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let dg: f64 = v_row.iter().zip(dw_row).map(|(&x, &d)| x.f64() * d.f64()).sum::<f64>() / norm;
            grad[spec.g + o] = T::of(dg);
            let scale = g[o].f64() / norm;
            let dv = &mut grad[spec.v + o * fan..spec.v + (o + 1) * fan];
            for ((out, &x), &d) in dv.iter_mut().zip(v_row).zip(dw_row) {
                *out = T::of(scale * (d.f64() - dg * x.f64() / norm));
            }
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{init, NetworkConfig};
    use crate::resample::SamplingFactor;

    fn tiny(factor: SamplingFactor) -> NetworkConfig {
        let mut cfg = NetworkConfig::for_factor(factor);
        cfg.width = 3;
        cfg.skip_width = 2;
        cfg.num_blocks = 1;
        cfg.seed = 1;
        cfg
    }

    #[test]
    fn output_shape() {
        let stats = NormalizationStats::new(0.5, 0.2).unwrap();
        let params = init::<f32>(&tiny(SamplingFactor::X2)).unwrap();
        let l = ImageGrid::filled(12, 9, 0.3).unwrap();
        assert_eq!(forward(&params, &stats, &l).unwrap().dims(), (24, 18));
        let params = init::<f32>(&tiny(SamplingFactor::X4)).unwrap();
        assert_eq!(forward(&params, &stats, &l).unwrap().dims(), (48, 36));
        let small = ImageGrid::filled(4, 9, 0.3).unwrap();
        assert!(matches!(forward(&params, &stats, &small), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn zero_parameters_give_the_mean() {
        let stats = NormalizationStats::new(0.37, 0.2).unwrap();
        let params = ParameterSet::<f64>::zeros(&tiny(SamplingFactor::X2)).unwrap();
        let l = ImageGrid::from_fn(8, 8, |r, c| (r * 8 + c) as f64 / 64.0).unwrap();
        let p = forward(&params, &stats, &l).unwrap();
        assert!(p.data().iter().all(|&v| (v - 0.37).abs() < 1e-15));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut cfg = tiny(SamplingFactor::X2);
        cfg.seed = 4;
        let stats = NormalizationStats::new(0.45, 0.25).unwrap();
        let mut params = init::<f64>(&cfg).unwrap();
        let l = ImageGrid::from_fn(8, 8, |r, c| ((r * 5 + c * 3) % 11) as f64 / 11.0).unwrap();
        let target: Vec<f64> = (0..256).map(|i| ((i * 7) % 13) as f64 / 13.0).collect();
        let objective = |p: &ParameterSet<f64>| -> f64 {
            let a = forward_raw(p, &stats, &l).unwrap();
            a.output().iter().zip(&target).map(|(o, t)| 0.5 * (o - t) * (o - t)).sum()
        };
        let acts = forward_raw(&params, &stats, &l).unwrap();
        let d: Vec<f64> = acts.output().iter().zip(&target).map(|(o, t)| o - t).collect();
        let grad = backward(&params, &acts, &d);
        let h = 1e-5;
        let mut checked = 0;
        for i in (0..params.len()).step_by(7) {
            let orig = params.data()[i];
            params.data_mut()[i] = orig + h;
            let up = objective(&params);
            params.data_mut()[i] = orig - h;
            let down = objective(&params);
            params.data_mut()[i] = orig;
            let fd = (up - down) / (2.0 * h);
            if grad[i].abs() > 1e-6 {
                let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs());
                assert!(rel < 1e-4, "param {i}: analytic {} vs numeric {fd}", grad[i]);
                checked += 1;
            }
        }
        assert!(checked > 20);
    }
}
