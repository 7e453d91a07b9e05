#[path = "support/fixtures.rs"]
mod fixtures;

use fixtures::{gradient_check, tiny_config, tiny_problem, total_loss};
use noisr_core::net::{
    forward, forward_raw, init, load_checkpoint, param_count, save_checkpoint, Checkpoint, Layout, TrainingMeta,
};
use noisr_core::{Boundary, ImageGrid, NetworkConfig, NormalizationStats, SamplingFactor};
use proptest::prelude::*;

#[test]
fn default_parameter_counts_are_near_the_published_sizes() {
    let two = param_count(&NetworkConfig::for_factor(SamplingFactor::X2)) as f64;
    let four = param_count(&NetworkConfig::for_factor(SamplingFactor::X4)) as f64;
    assert!((two / 889_000.0 - 1.0).abs() <= 0.10, "2X: {two}");
    assert!((four / 253_000.0 - 1.0).abs() <= 0.10, "4X: {four}");
}

#[test]
fn doubling_blocks_adds_the_block_cost() {
    for factor in [SamplingFactor::X2, SamplingFactor::X4] {
        let base = NetworkConfig::for_factor(factor);
        let doubled = NetworkConfig { num_blocks: 2 * base.num_blocks, ..base };
        let (w, e, ks) = (base.width, base.expanded(), base.kernel_size);
        let per_block = 2 * w * e * ks * ks + 2 * e + 2 * w;
        assert_eq!(param_count(&doubled) - param_count(&base), base.num_blocks * per_block);
    }
}

#[test]
fn head_directions_follow_he_scaling() {
    let cfg = NetworkConfig::for_factor(SamplingFactor::X2);
    let params = init::<f64>(&cfg).unwrap();
    let v = params.array("head.v").unwrap();
    let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    let want = (2.0 / (cfg.kernel_size * cfg.kernel_size) as f64).sqrt();
    assert!((var.sqrt() / want - 1.0).abs() < 0.2, "std {} vs {want}", var.sqrt());
    assert!(params.array("head.b").unwrap().iter().all(|&b| b == 0.0));
}

#[test]
fn layout_names_every_array_once() {
    let layout = Layout::new(&tiny_config(0));
    let names: Vec<_> = layout.arrays().into_iter().map(|a| a.name).collect();
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), names.len());
    assert!(names.contains(&"block0.project.g".to_string()));
}

#[test]
fn checkpoint_round_trip_predicts_identically() {
    let cfg = NetworkConfig { width: 6, skip_width: 6, num_blocks: 2, seed: 11, ..NetworkConfig::for_factor(SamplingFactor::X2) };
    let ckpt = Checkpoint {
        params: init::<f32>(&cfg).unwrap(),
        stats: NormalizationStats::new(0.41, 0.17).unwrap(),
        meta: TrainingMeta { epoch: 3, val_total: -1.5, ..TrainingMeta::default() },
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.ckpt");
    save_checkpoint(&ckpt, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, ckpt);
    let l = ImageGrid::from_fn(20, 14, |r, c| ((r * 3 + c * 7) % 17) as f64 / 17.0).unwrap();
    let a = forward(&ckpt.params, &ckpt.stats, &l).unwrap();
    let b = forward(&back.params, &back.stats, &l).unwrap();
    assert_eq!(a.data(), b.data());
}

#[test]
fn full_objective_gradient_matches_finite_differences() {
    for lambda in [0.0, -10.0] {
        let (worst, checked, total) = gradient_check(lambda, 1e-5);
        assert!(checked * 2 > total, "only {checked} of {total} coordinates above threshold");
        assert!(worst <= 1e-3, "lambda {lambda}: worst relative error {worst}");
    }
}

#[test]
fn weight_norm_scale_invariance() {
    let cfg = tiny_config(9);
    let stats = NormalizationStats::new(0.5, 0.2).unwrap();
    let (l, g, n) = tiny_problem();
    let params = init::<f64>(&cfg).unwrap();
    let base = total_loss(&params, &stats, &l, &g, &n, -10.0);
    for c in [0.25, 3.0, 40.0] {
        let mut scaled = params.clone();
        for layer in &Layout::new(&cfg).layers {
            for i in layer.v_range() {
                scaled.data_mut()[i] *= c;
            }
        }
        let got = total_loss(&scaled, &stats, &l, &g, &n, -10.0);
        assert!((got - base).abs() <= 1e-10 * base.abs().max(1.0), "c = {c}: {got} vs {base}");
    }
}

fn roll(img: &ImageGrid, dr: usize, dc: usize) -> ImageGrid {
    let (h, w) = img.dims();
    ImageGrid::from_fn(h, w, |r, c| img.get((r + h - dr) % h, (c + w - dc) % w)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn periodic_network_is_translation_covariant(seed in 0u64..1000, dr in 0usize..3, dc in 0usize..3, four in any::<bool>()) {
        let factor = if four { SamplingFactor::X4 } else { SamplingFactor::X2 };
        let mut cfg = tiny_config(seed);
        cfg.factor = factor;
        cfg.kernel_size = if four { 5 } else { 3 };
        cfg.boundary = Boundary::Periodic;
        let k = factor.get();
        let params = init::<f64>(&cfg).unwrap();
        let stats = NormalizationStats::new(0.5, 0.2).unwrap();
        let l = ImageGrid::from_fn(9, 10, |r, c| ((r * 13 + c * 5 + seed as usize) % 23) as f64 / 23.0).unwrap();
        let out = |img: &ImageGrid| {
            let a = forward_raw(&params, &stats, img).unwrap();
            let (h, w) = a.output_dims(k);
            ImageGrid::new(h, w, a.output().to_vec()).unwrap()
        };
        let shifted_then_net = out(&roll(&l, dr, dc));
        let net_then_shifted = roll(&out(&l), dr * k, dc * k);
        for (a, b) in shifted_then_net.data().iter().zip(net_then_shifted.data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
