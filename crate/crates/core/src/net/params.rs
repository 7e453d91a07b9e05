use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::real::Real;
use super::NetworkConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// Same-size convolution, `inputs -> outputs` channels.
    Conv { inputs: usize, outputs: usize, kernel: usize },
    /// Stride-`factor` transposed convolution to a single channel, kernel
    /// `2 factor`.
    Transposed { inputs: usize, factor: usize },
}

impl LayerKind {
    pub fn outputs(&self) -> usize {
        match *self {
            LayerKind::Conv { outputs, .. } => outputs,
            LayerKind::Transposed { .. } => 1,
        }
    }

    /// Weight entries per output channel.
    pub fn fan(&self) -> usize {
        match *self {
            LayerKind::Conv { inputs, kernel, .. } => inputs * kernel * kernel,
            LayerKind::Transposed { inputs, factor } => inputs * 4 * factor * factor,
        }
    }

    /// Input taps reaching one output value; the transposed kernel overlaps
    /// 2x2 input pixels per channel.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Conv { .. } => self.fan(),
            LayerKind::Transposed { inputs, .. } => inputs * 4,
        }
    }

    fn weight_dims(&self) -> Vec<usize> {
        match *self {
            LayerKind::Conv { inputs, outputs, kernel } => vec![outputs, inputs, kernel, kernel],
            LayerKind::Transposed { inputs, factor } => vec![1, inputs, 2 * factor, 2 * factor],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    /// Offsets of the direction `v`, scale `g` and bias arrays.
    pub v: usize,
    pub g: usize,
    pub b: usize,
}

impl LayerSpec {
    pub fn v_range(&self) -> std::ops::Range<usize> {
        self.v..self.v + self.kind.outputs() * self.kind.fan()
    }

    pub fn g_range(&self) -> std::ops::Range<usize> {
        self.g..self.g + self.kind.outputs()
    }

    pub fn b_range(&self) -> std::ops::Range<usize> {
        self.b..self.b + self.kind.outputs()
    }
}

/// One named array of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArraySpec {
    pub name: String,
    pub dims: Vec<usize>,
    pub offset: usize,
}

impl ArraySpec {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Placement of every layer inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub layers: Vec<LayerSpec>,
    pub total: usize,
}

/// Layer indices in [`Layout::layers`].
pub(crate) const HEAD: usize = 0;

impl Layout {
    pub fn new(config: &NetworkConfig) -> Self {
        let (w, e, ks, k) = (config.width, config.expanded(), config.kernel_size, config.factor.get());
        let mut kinds = vec![("head".to_string(), LayerKind::Conv { inputs: 1, outputs: w, kernel: ks })];
        for i in 0..config.num_blocks {
            kinds.push((format!("block{i}.expand"), LayerKind::Conv { inputs: w, outputs: e, kernel: ks }));
            kinds.push((format!("block{i}.project"), LayerKind::Conv { inputs: e, outputs: w, kernel: ks }));
        }
        kinds.push(("tail".into(), LayerKind::Conv { inputs: w, outputs: w, kernel: ks }));
        kinds.push(("up".into(), LayerKind::Transposed { inputs: w, factor: k }));
        kinds.push((
            "skip".into(),
            LayerKind::Conv { inputs: 1, outputs: config.skip_width, kernel: ks },
        ));
        kinds.push(("skip_up".into(), LayerKind::Transposed { inputs: config.skip_width, factor: k }));

        let mut offset = 0;
        let layers = kinds
            .into_iter()
            .map(|(name, kind)| {
                let v = offset;
                let g = v + kind.outputs() * kind.fan();
                let b = g + kind.outputs();
                offset = b + kind.outputs();
                LayerSpec { name, kind, v, g, b }
            })
            .collect();
        Self { layers, total: offset }
    }

    pub fn num_blocks(&self) -> usize {
        (self.layers.len() - 5) / 2
    }

    pub(crate) fn expand(&self, block: usize) -> usize {
        1 + 2 * block
    }

    pub(crate) fn project(&self, block: usize) -> usize {
        2 + 2 * block
    }

    pub(crate) fn tail(&self) -> usize {
        self.layers.len() - 4
    }

    pub(crate) fn up(&self) -> usize {
        self.layers.len() - 3
    }

    pub(crate) fn skip(&self) -> usize {
        self.layers.len() - 2
    }

    pub(crate) fn skip_up(&self) -> usize {
        self.layers.len() - 1
    }

    /// Named arrays in storage order: `<layer>.v`, `<layer>.g`, `<layer>.b`.
    pub fn arrays(&self) -> Vec<ArraySpec> {
        self.layers
            .iter()
            .flat_map(|l| {
                let outs = l.kind.outputs();
                [
                    ArraySpec { name: format!("{}.v", l.name), dims: l.kind.weight_dims(), offset: l.v },
                    ArraySpec { name: format!("{}.g", l.name), dims: vec![outs], offset: l.g },
                    ArraySpec { name: format!("{}.b", l.name), dims: vec![outs], offset: l.b },
                ]
            })
            .collect()
    }
}

/// Flat trainable parameters of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet<T> {
    config: NetworkConfig,
    layout: Arc<Layout>,
    data: Vec<T>,
}

impl<T: Real> ParameterSet<T> {
    pub fn zeros(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(config);
        let data = vec![T::zero(); layout.total];
        Ok(Self { config: *config, layout: Arc::new(layout), data })
    }

    pub fn from_data(config: &NetworkConfig, data: Vec<T>) -> Result<Self> {
        let mut set = Self::zeros(config)?;
        if data.len() != set.data.len() {
            return Err(Error::ConfigMismatch(format!(
                "{} parameters supplied, configuration needs {}",
                data.len(),
                set.data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter values".into()));
        }
        set.data = data;
        Ok(set)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn array(&self, name: &str) -> Option<&[T]> {
        self.layout
            .arrays()
            .into_iter()
            .find(|a| a.name == name)
            .map(|a| &self.data[a.offset..a.offset + a.len()])
    }

    /// Same values in another precision.
    pub fn cast<U: Real>(&self) -> ParameterSet<U> {
        ParameterSet {
            config: self.config,
            layout: Arc::clone(&self.layout),
            data: self.data.iter().map(|v| U::of(v.f64())).collect(),
        }
    }

    /// Effective weights of every layer, `outputs x fan` each.
    pub(crate) fn effective_weights(&self) -> Vec<Vec<T>> {
        self.layout
            .layers
            .iter()
            .map(|l| {
                effective_rows(
                    &self.data[l.v_range()],
                    &self.data[l.g_range()],
                    l.kind.fan(),
                )
            })
            .collect()
    }
}

/// `g v / |v|` row by row; rows whose direction has zero norm give zeros.
pub(crate) fn effective_rows<T: Real>(v: &[T], g: &[T], fan: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(v.len());
    for (row, &scale) in v.chunks(fan).zip(g) {
        let norm = row.iter().map(|&x| x.f64() * x.f64()).sum::<f64>().sqrt();
        if norm == 0.0 {
            out.extend(std::iter::repeat_n(T::zero(), fan));
        } else {
            let factor = T::of(scale.f64() / norm);
            out.extend(row.iter().map(|&x| x * factor));
        }
    }
    out
}

/// Weight normalization `w = g v / |v|`, one scale per output channel (row
/// of `v`, which holds `g.len()` rows).
pub fn weight_norm_effective<T: Real>(v: &[T], g: &[T]) -> Result<Vec<T>> {
    if g.is_empty() || !v.len().is_multiple_of(g.len()) {
        return Err(Error::InvalidArgument(format!(
            "{} direction entries cannot be split into {} channels",
            v.len(),
            g.len()
        )));
    }
    let fan = v.len() / g.len();
    if v.chunks(fan).any(|row| row.iter().all(|x| x.is_zero())) {
        return Err(Error::InvalidArgument("zero-norm weight direction".into()));
    }
    Ok(effective_rows(v, g, fan))
}

/// Gain on the He std of every residual block's projection, so the initial
/// network stays close to its skip paths.
pub const RESIDUAL_INIT_GAIN: f64 = 0.1;

/// Normal directions with `std = gain * sqrt(2 / fan_in)`, scales equal to
/// the row norms (so the effective weights equal `v`), zero biases.
/// Returns `(v, g, b)`.
pub fn init_weight_norm_layer<T: Real>(
    rng: &mut ChaCha8Rng,
    kind: &LayerKind,
    gain: f64,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let std = gain * (2.0 / kind.fan_in() as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("positive std");
    let (outs, fan) = (kind.outputs(), kind.fan());
    let v: Vec<f64> = (0..outs * fan).map(|_| normal.sample(rng)).collect();
    let g: Vec<T> = v
        .chunks(fan)
        .map(|row| T::of(row.iter().map(|x| x * x).sum::<f64>().sqrt()))
        .collect();
    (v.into_iter().map(T::of).collect(), g, vec![T::zero(); outs])
}

/// Deterministic initialization from `config.seed`.
pub fn init<T: Real>(config: &NetworkConfig) -> Result<ParameterSet<T>> {
    let mut set = ParameterSet::zeros(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let layers = set.layout.layers.clone();
    let projections: Vec<usize> = (0..set.layout.num_blocks()).map(|i| set.layout.project(i)).collect();
    for (idx, layer) in layers.iter().enumerate() {
        let gain = if projections.contains(&idx) { RESIDUAL_INIT_GAIN } else { 1.0 };
        let (v, g, b) = init_weight_norm_layer::<T>(&mut rng, &layer.kind, gain);
        set.data[layer.v_range()].copy_from_slice(&v);
        set.data[layer.g_range()].copy_from_slice(&g);
        set.data[layer.b_range()].copy_from_slice(&b);
    }
    Ok(set)
}

/// Number of scalars (directions, scales and biases) of a configuration.
pub fn param_count(config: &NetworkConfig) -> usize {
    Layout::new(config).total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resample::SamplingFactor;

    #[test]
    fn layout_is_contiguous() {
        let cfg = NetworkConfig::for_factor(SamplingFactor::X2);
        let layout = Layout::new(&cfg);
        let arrays = layout.arrays();
        let mut offset = 0;
        for a in &arrays {
            assert_eq!(a.offset, offset, "{}", a.name);
            offset += a.len();
        }
        assert_eq!(offset, layout.total);
        assert_eq!(layout.num_blocks(), 8);
        assert_eq!(layout.layers[HEAD].name, "head");
        assert_eq!(layout.layers[layout.skip_up()].name, "skip_up");
        assert_eq!(layout.layers[layout.project(7)].name, "block7.project");
    }

    #[test]
    fn default_counts() {
        assert_eq!(param_count(&NetworkConfig::for_factor(SamplingFactor::X2)), 895_093);
        assert_eq!(param_count(&NetworkConfig::for_factor(SamplingFactor::X4)), 237_172);
    }

    #[test]
    fn init_is_deterministic_and_identity_scaled() {
        let mut cfg = NetworkConfig::for_factor(SamplingFactor::X2);
        cfg.width = 4;
        cfg.num_blocks = 2;
        cfg.seed = 5;
        let a = init::<f64>(&cfg).unwrap();
        let b = init::<f64>(&cfg).unwrap();
        assert_eq!(a, b);
        let eff = a.effective_weights();
        for (l, w) in a.layout().layers.iter().zip(&eff) {
            let v = &a.data()[l.v_range()];
            for (x, y) in v.iter().zip(w) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!(a.data()[l.b_range()].iter().all(|&x| x == 0.0));
        }
        cfg.seed = 6;
        assert_ne!(init::<f64>(&cfg).unwrap(), a);
    }

    #[test]
    fn zero_norm_direction_is_an_error() {
        assert!(weight_norm_effective(&[0.0f64, 0.0, 1.0, 2.0], &[1.0, 1.0]).is_err());
        assert!(weight_norm_effective(&[1.0f64, 0.0, 1.0], &[1.0, 1.0]).is_err());
    }
}
