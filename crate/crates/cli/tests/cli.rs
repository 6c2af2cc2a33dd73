use std::path::Path;
use std::process::{Command, Output};

fn surgphase(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surgphase"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = surgphase(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn synth(dir: &Path) {
    ok(dir, &["synth", "--out", "data", "--videos", "4", "--scale", "0.05", "--seed", "5"]);
}

const TRAIN: &[&str] = &[
    "train-lstm",
    "--out-dir",
    "out",
    "--cycles",
    "2",
    "--epochs",
    "2",
    "--hidden",
    "6",
    "--train-per-class",
    "3",
    "--stride",
    "50",
];

#[test]
fn stage_by_stage_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    assert!(d.join("data/annotations/synth_video_01.txt").is_file());

    let stats = ok(d, &["stats", "--out-dir", "out"]);
    assert!(stats.contains("4 videos"));
    ok(d, &["extract-shots", "--out-dir", "out", "--per-phase", "6"]);
    assert_eq!(json(&d.join("out/shots.json"))["shots"].as_array().unwrap().len(), 48);

    ok(
        d,
        &["extract-features", "--out-dir", "out", "--mode", "resize_square", "--stride", "25", "--frames", "data/ground_truth.json"],
    );
    let knn = ok(d, &["eval-knn", "--out-dir", "out", "--metric", "euclidean", "--time-scale", "raw-minutes"]);
    assert!(knn.contains("resize_square max euclidean +time"), "{knn}");
    let record = json(&d.join("out/knn.json"));
    assert_eq!(record["kind"], "knn");
    assert_eq!(record["settings"]["time_scale"], 1.0);
    assert_eq!(record["predictions"].as_array().unwrap().len(), 48);

    ok(d, TRAIN);
    assert!(d.join("out/models/lstm-cycle0.splm").is_file());
    assert!(d.join("out/models/lstm-cycle1.splm").is_file());
    ok(d, &["eval-lstm", "--out-dir", "out", "--model", "out/models/lstm.splm"]);
    let eval = json(&d.join("out/lstm-eval.json"));
    let trained = json(&d.join("out/lstm.json"));
    assert_eq!(eval["metrics"]["confusion"], trained["metrics"]["confusion"]);

    let csv = ok(d, &["report", "--format", "csv", "out/knn.json", "out/lstm.json"]);
    assert!(csv.starts_with("label,acc,pre,rec,f1"), "{csv}");
    ok(d, &["report", "--out-dir", "out", "--format", "json", "--out", "out/report.json"]);
    assert_eq!(json(&d.join("out/report.json"))["rows"].as_array().unwrap().len(), 2);

    let prov = json(&d.join("out/knn.json.provenance.json"));
    assert_eq!(prov["stage"], "eval-knn");
    assert_eq!(prov["config"]["receptive_field"], "resize_square");
    assert_eq!(prov["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn unchanged_rerun_skips_and_force_redoes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    ok(d, &["extract-shots", "--out-dir", "out", "--per-phase", "4"]);
    let again = surgphase(d, &["extract-shots", "--out-dir", "out", "--per-phase", "4"]);
    assert!(String::from_utf8_lossy(&again.stderr).contains("up to date"));
    let forced = surgphase(d, &["extract-shots", "--out-dir", "out", "--per-phase", "4", "--force"]);
    assert!(!String::from_utf8_lossy(&forced.stderr).contains("up to date"));
    let changed = surgphase(d, &["extract-shots", "--out-dir", "out", "--per-phase", "5"]);
    assert!(!String::from_utf8_lossy(&changed.stderr).contains("up to date"));
}

#[test]
fn run_uses_the_config_file_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d);
    let config = r#"{
        "dataset_root": "data",
        "receptive_field": "resize_square",
        "pooling_stride": 25,
        "lstm_stride": 50,
        "shots": {"per_phase_target": 6},
        "train": {"hidden": 6, "epochs": 2, "cycles": 2, "train_per_class": 3}
    }"#;
    std::fs::write(d.join("run.json"), config).unwrap();
    let first = ok(d, &["--config", "run.json", "--out-dir", "a", "run"]);
    assert!(first.contains("6 of 6 stages ran"), "{first}");
    let second = ok(d, &["--config", "run.json", "--out-dir", "a", "run"]);
    assert!(second.contains("0 of 6 stages ran"), "{second}");
    ok(d, &["--config", "run.json", "--out-dir", "b", "run"]);
    assert_eq!(
        std::fs::read(d.join("a/report.json")).unwrap(),
        std::fs::read(d.join("b/report.json")).unwrap()
    );
}

#[test]
fn saliency_preview_writes_both_images() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let frame = image::RgbImage::from_fn(128, 72, |x, y| {
        let inside = (90..100).contains(&x) && (20..30).contains(&y);
        image::Rgb(if inside { [250, 240, 230] } else { [40, 20, 20] })
    });
    frame.save(d.join("frame.png")).unwrap();
    let out = ok(
        d,
        &["saliency-preview", "frame.png", "--patch-side", "48", "--scales", "3", "--orientations", "4", "--out-dir", "prev"],
    );
    assert!(out.contains("patch 48x48"), "{out}");
    let map = image::open(d.join("prev/frame-saliency.png")).unwrap();
    assert_eq!((map.width(), map.height()), (85, 48));
    assert!(d.join("prev/frame-patch.png").is_file());
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let missing = surgphase(d, &["stats", "--annotations", "no/such/dir"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no/such/dir"));

    std::fs::write(d.join("bad.json"), r#"{"metrik": "cosine"}"#).unwrap();
    assert_eq!(surgphase(d, &["--config", "bad.json", "stats"]).status.code(), Some(2));
    assert_eq!(
        surgphase(d, &["extract-features", "--provider", "magic"]).status.code(),
        Some(2)
    );
    assert_eq!(surgphase(d, &["eval-knn", "--time-scale", "-3"]).status.code(), Some(2));

    synth(d);
    ok(d, &["extract-shots", "--out-dir", "out", "--per-phase", "6"]);
    ok(
        d,
        &["extract-features", "--out-dir", "out", "--mode", "resize_square", "--stride", "25", "--frames", "data/ground_truth.json"],
    );
    let mut diverge = TRAIN.to_vec();
    diverge.extend(["--learning-rate", "1e308"]);
    let nan = surgphase(d, &diverge);
    assert_eq!(nan.status.code(), Some(4), "{}", String::from_utf8_lossy(&nan.stderr));
    assert!(String::from_utf8_lossy(&nan.stderr).contains("non-finite"));
}
