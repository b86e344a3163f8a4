use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
master_seed = 7

[corpus.synthetic]
n_slides = 16
tiles_per_slide = 5

[calibration]
sample_size = 60
"#;

fn blurmm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blurmm"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn setup(config: &str) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), config).unwrap();
    tmp
}

#[test]
fn unknown_config_key_exits_one() {
    let tmp = setup("master_seed = 1\nbogus = 3\n[blur]\nsigmaz = [1.0]\n");
    let out = blurmm(&["--config", "run.toml", "sweep"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("sigmaz"), "{err}");
}

#[test]
fn missing_manifest_exits_one() {
    let tmp = setup("[corpus]\nmanifest = \"nowhere/manifest.csv\"\n");
    let out = blurmm(&["--config", "run.toml", "scenarios"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn corrupt_inputs_exit_two() {
    let tmp = setup(SMALL);
    fs::write(tmp.path().join("thresholds.json"), "{ not json").unwrap();
    let out = blurmm(&["--config", "run.toml", "route", "--thresholds", "thresholds.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    fs::create_dir_all(tmp.path().join("c")).unwrap();
    fs::write(tmp.path().join("c/manifest.csv"), "tile_id,slide_id\nbroken").unwrap();
    let cfg = format!("{SMALL}\n[corpus]\nmanifest = \"c/manifest.csv\"\n");
    fs::write(tmp.path().join("bad.toml"), cfg).unwrap();
    let out = blurmm(&["--config", "bad.toml", "sweep"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn effective_config_reproduces_the_run() {
    let tmp = setup(SMALL);
    let first = blurmm(&["--config", "run.toml", "--out", "a", "sweep"], tmp.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = blurmm(&["--config", "a/effective_config.toml", "--out", "b", "sweep"], tmp.path());
    assert!(second.status.success());
    let read = |p: &str| fs::read(tmp.path().join(p)).unwrap();
    assert_eq!(read("a/sweep_report.csv"), read("b/sweep_report.csv"));
    assert_eq!(read("a/effective_config.toml"), read("b/effective_config.toml"));
    let meta: serde_json::Value = serde_json::from_slice(&read("a/sweep_metadata.json")).unwrap();
    assert_eq!(meta["master_seed"], 7);
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = setup(SMALL);
    assert!(blurmm(&["--config", "run.toml", "--out", "a", "--seed", "9", "sweep"], tmp.path()).status.success());
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("a/sweep_metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["master_seed"], 9);
}

#[test]
fn threads_do_not_change_scenario_reports() {
    let tmp = setup(SMALL);
    for (out, threads) in [("t1", "1"), ("t4", "4")] {
        let o = blurmm(&["--config", "run.toml", "--out", out, "--threads", threads, "scenarios"], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["scenario_report.csv", "scenario_report.json", "scenario_table.csv", "thresholds.json"] {
        let a = fs::read(tmp.path().join("t1").join(name)).unwrap();
        let b = fs::read(tmp.path().join("t4").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn full_command_chain() {
    let cfg = format!("{SMALL}\n[roster]\nsource = \"trained\"\n");
    let tmp = setup(&cfg);
    let run = |args: &[&str]| {
        let mut all = vec!["--config", "run.toml", "--out", "o"];
        all.extend_from_slice(args);
        let o = blurmm(&all, tmp.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    run(&["gen-corpus"]);
    run(&["calibrate"]);
    run(&["train"]);
    let from_file = format!("{SMALL}\n[roster]\nsource = \"file\"\nfile = \"o/roster.json\"\n");
    fs::write(tmp.path().join("run.toml"), from_file).unwrap();
    run(&["route", "--thresholds", "o/thresholds.json"]);
    run(&["report", "--lv-curve", "o/lv_curve.csv"]);
    let o = tmp.path().join("o");
    for name in ["corpus/manifest.csv", "lv_curve.csv", "roster.json", "thresholds.json", "scores.csv", "trace.csv", "route_summary.json", "cutoffs.json"] {
        assert!(o.join(name).exists(), "{name} missing");
    }
    let scores = fs::read_to_string(o.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 1 + 16 * 5);
    let cutoffs: serde_json::Value = serde_json::from_slice(&fs::read(o.join("cutoffs.json")).unwrap()).unwrap();
    assert_eq!(cutoffs["sigma_cutoffs"], serde_json::json!([1.5, 6.0]));

    let from_manifest = format!("{SMALL}\n[corpus]\nmanifest = \"o/corpus/manifest.csv\"\n");
    fs::write(tmp.path().join("disk.toml"), from_manifest).unwrap();
    let o = blurmm(&["--config", "disk.toml", "--out", "d", "sweep"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn trained_roster_needs_folds() {
    let cfg = format!("{SMALL}\n[roster]\nsource = \"trained\"\n");
    let tmp = setup(&cfg);
    assert_eq!(blurmm(&["--config", "run.toml", "sweep"], tmp.path()).status.code(), Some(1));
    let cfg = format!("{SMALL}\n[roster]\nsource = \"trained\"\n[evaluation]\ncv_folds = 2\n");
    fs::write(tmp.path().join("cv.toml"), cfg).unwrap();
    let o = blurmm(&["--config", "cv.toml", "--out", "cv", "sweep"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(tmp.path().join("cv/sweep_report.csv")).unwrap();
    assert!(report.contains("fold_mean") && report.contains("pooled"));
}

#[test]
fn calibrate_creates_its_output_directory() {
    let tmp = setup(SMALL);
    let o = blurmm(&["--config", "run.toml", "--out", "fresh/nested", "calibrate"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("fresh/nested/lv_curve.csv").exists());
    let o = blurmm(&["report", "--lv-curve", "missing.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
