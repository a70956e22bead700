use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn monocorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monocorr")).args(args).output().unwrap()
}

fn out_dir(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn csv_column(body: &str, name: &str) -> Vec<String> {
    let mut lines = body.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn threegap_golden_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let o = monocorr(&["threegap", "--alpha", "1.6180339887", "--n-list", "10,100,1000", "--output-dir", &out_dir(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = fs::read_to_string(dir.path().join("threegap.csv")).unwrap();
    let counts = csv_column(&body, "distinct_count");
    assert_eq!(counts.len(), 3);
    assert!(counts.iter().all(|c| c.parse::<usize>().unwrap() <= 3));
    assert!(!body.contains('\r'));
}

#[test]
fn paircorr_deviation_at_two_to_twenty() {
    let dir = tempfile::tempdir().unwrap();
    let o = monocorr(&[
        "paircorr", "--kind", "monomial", "--alpha", "1.41421356", "--theta", "0.3", "--n", "1048576", "--f", "fejer:1.0",
        "--output-dir", &out_dir(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = fs::read_to_string(dir.path().join("paircorr.csv")).unwrap();
    let dev: f64 = csv_column(&body, "deviation")[0].parse().unwrap();
    assert!((dev - -0.0222385335188795).abs() < 1e-9, "{dev}");
    assert!(csv_column(&body, "runtime_ms")[0].is_empty());
}

#[test]
fn empty_config_is_missing_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    fs::write(&cfg, "").unwrap();
    let o = monocorr(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing command"));
}

#[test]
fn unknown_key_is_rejected_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"command\": \"gaps\",\n  \"alhpa\": 1.0\n}\n").unwrap();
    let o = monocorr(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("alhpa") && err.contains("line 3"), "{err}");
}

#[test]
fn physical_parameters_have_no_defaults() {
    let o = monocorr(&["paircorr", "--kind", "monomial", "--theta", "0.3", "--n", "10", "--f", "fejer:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`alpha`"));
}

#[test]
fn module_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = monocorr(&[
        "assembly", "--kind", "monomial", "--alpha", "1.4", "--theta", "0.3", "--n", "1000", "--gamma", "9", "--f", "fejer:1",
        "--output-dir", &out_dir(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"command": "threegap", "alpha": 0.5, "N_list": [10]}"#).unwrap();
    let o = monocorr(&["--config", cfg.to_str().unwrap(), "--alpha", "0.25", "--output-dir", &out_dir(dir.path())]);
    assert!(o.status.success());
    let echo: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(echo["alpha"], 0.25);
    assert_eq!(echo["N_list"][0], 10);
}

#[test]
fn gap_histogram_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = monocorr(&[
        "gaps", "--kind", "monomial", "--alpha", "1.41421356", "--theta", "0.3", "--n", "20000", "--output-dir", &out_dir(dir.path()),
    ]);
    assert!(o.status.success());
    let data = fs::read_to_string(dir.path().join("gaps.plot.txt")).unwrap();
    assert!(data.starts_with('#'));
    assert_eq!(data.lines().filter(|l| !l.starts_with('#')).count(), 50);
    let desc: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("gaps.plot.json")).unwrap()).unwrap();
    assert_eq!(desc["reference"], "exp");
    assert_eq!(desc["style"], "histogram");
}

#[test]
fn manifest_lists_every_file_with_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let o = monocorr(&["bprocess-grid", "--output-dir", &out_dir(dir.path())]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let files = m["files"].as_array().unwrap();
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = files.iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    listed.sort();
    assert_eq!(listed, on_disk);
    assert!(files.iter().all(|f| f["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn reruns_are_byte_identical_across_threads() {
    let base = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let dir = base.path().join(threads);
        let o = monocorr(&[
            "paircorr", "--kind", "monomial", "--alpha", "1.41421356", "--theta", "0.3", "--n-list", "1000,50000",
            "--f", "fejer:1", "--threads", threads, "--output-dir", dir.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        ["paircorr.csv", "paircorr.json", "paircorr.plot.txt"].map(|f| fs::read(dir.join(f)).unwrap())
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("4"));
}
