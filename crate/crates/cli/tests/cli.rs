use std::path::Path;
use std::process::{Command, Output};

use noisr_core::image::{load_image, save_image};
use noisr_core::ImageGrid;

fn noisr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisr")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = noisr(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Tiny dataset plus a one-epoch checkpoint.
fn trained(dir: &Path) -> (String, String) {
    let (src, data) = (dir.join("src"), dir.join("data"));
    ok(&["synth", "--out", &s(&src), "--count", "5", "--size", "32"]);
    ok(&["dataset", "--src", &s(&src), "--out", &s(&data), "--splits", "2/2/1"]);
    let manifest = s(&data.join("manifest.csv"));
    let ckpt = s(&dir.join("net.ckpt"));
    let out = ok(&[
        "train", "--src", &manifest, "--out", &ckpt, "--width", "4", "--blocks", "1", "--max-epochs", "1", "--patch-size", "16",
    ]);
    assert!(out.starts_with("epoch,fit_train,noise_train,fit_val,noise_val,total_val,best_so_far\n1,"));
    (manifest, ckpt)
}

#[test]
fn missing_manifest_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = noisr(&["train", "--src", &s(&dir.path().join("nope.csv")), "--out", &s(&dir.path().join("x.ckpt"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(noisr(&["train"]).status.code(), Some(2));
}

#[test]
fn predict_upsamples_and_rejects_damaged_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (_, ckpt) = trained(dir.path());
    let lr = dir.path().join("lr.png");
    save_image(&ImageGrid::from_fn(128, 128, |r, c| ((r * 3 + c) % 200) as f64 / 255.0).unwrap(), &lr).unwrap();
    let hr = dir.path().join("hr.png");
    ok(&["predict", "--checkpoint", &ckpt, "--src", &s(&lr), "--out", &s(&hr)]);
    assert_eq!(load_image(&hr).unwrap().dims(), (256, 256));

    let wrong = noisr(&["predict", "--checkpoint", &ckpt, "--src", &s(&lr), "--out", &s(&hr), "--factor", "4"]);
    assert_eq!(wrong.status.code(), Some(2));

    let bytes = std::fs::read(&ckpt).unwrap();
    let cut = dir.path().join("cut.ckpt");
    std::fs::write(&cut, &bytes[..bytes.len() - 9]).unwrap();
    let out = noisr(&["predict", "--checkpoint", &s(&cut), "--src", &s(&lr), "--out", &s(&hr)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn evaluation_and_report_use_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, ckpt) = trained(dir.path());
    let eval = dir.path().join("eval");
    ok(&["evaluate", "--src", &manifest, "--checkpoint", &ckpt, "--out", &s(&eval)]);
    let report = std::fs::read_to_string(eval.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 3);
    for name in ["summary.csv", "histogram_noisy.csv", "histogram_our.csv", "psnr_cc.csv"] {
        assert!(eval.join(name).is_file(), "{name}");
    }
    let table = ok(&["report", "--src", &s(&eval.join("report.csv"))]);
    assert!(table.contains("PSNR") && table.contains('*'));
}

#[test]
fn histogram_of_the_noisy_image_matches_itself() {
    let dir = tempfile::tempdir().unwrap();
    let (g, n) = (dir.path().join("g.png"), dir.path().join("n.png"));
    save_image(&ImageGrid::filled(20, 20, 0.5).unwrap(), &g).unwrap();
    save_image(&ImageGrid::from_fn(20, 20, |r, c| 0.5 + ((r + c) % 5) as f64 / 255.0).unwrap(), &n).unwrap();
    let out = dir.path().join("hist");
    ok(&["histogram", "--prediction", &s(&n), "--ground-truth", &s(&g), "--noisy", &s(&n), "--out", &s(&out)]);
    let a = std::fs::read(out.join("histogram_noisy.csv")).unwrap();
    let b = std::fs::read(out.join("histogram_prediction.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, format!("# synthetic scenes\nout = {}\ncount = 3\nsize = 24\n", s(&dir.path().join("scenes")))).unwrap();
    ok(&["--config", &s(&cfg), "synth", "--count", "2"]);
    let n = std::fs::read_dir(dir.path().join("scenes")).unwrap().count();
    assert_eq!(n, 2);
}
