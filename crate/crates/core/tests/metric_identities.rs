use noisr_core::metrics::{evaluate_all, mse, ncc, psnr};
use noisr_core::{FsimParams, ImageGrid, SsimParams};
use proptest::prelude::*;

fn field(h: usize, w: usize, seed: u64, lo: f64, span: f64) -> ImageGrid {
    ImageGrid::from_fn(h, w, |r, c| {
        let v = ((r as u64 * 7919 + c as u64 * 104_729 + seed * 13) % 1009) as f64 / 1008.0;
        lo + span * v
    })
    .unwrap()
}

#[test]
fn identical_images_score_perfectly() {
    let x = field(24, 24, 3, 0.1, 0.8);
    let m = evaluate_all(&x, &x, &SsimParams::default(), &FsimParams::default()).unwrap();
    assert_eq!(m.values(), [0.0, 0.0, 1.0, f64::INFINITY, 1.0, 1.0, 1.0]);
    assert!(m.identical());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psnr_is_defined_by_mse(s1 in 0u64..500, s2 in 500u64..1000) {
        let (n, p) = (field(12, 9, s1, 0.0, 1.0), field(12, 9, s2, 0.0, 1.0));
        let peak = n.data().iter().fold(0.0f64, |m, v| m.max(v * 255.0));
        let want = 10.0 * (peak * peak / mse(&n, &p).unwrap()).log10();
        prop_assert!((psnr(&n, &p).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn ncc_ignores_positive_affine_maps(seed in 0u64..1000, a in 0.1f64..1.5, b in 0.0f64..0.1) {
        let x = field(16, 16, seed, 0.2, 0.4);
        let y = x.map(|v| a * v + b).unwrap();
        prop_assert!((ncc(&y, &x).unwrap() - 1.0).abs() <= 1e-9);
    }
}
