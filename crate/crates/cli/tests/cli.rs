use std::path::Path;
use std::process::{Command, Output};

fn multifit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multifit"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("MULTIFIT_DATA_ROOT")
        .output()
        .expect("run multifit")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL: &str = r#"
exec = "sequential"

[synthetic]
signals = 4
records = 60
horizon = 12.0
missing = 0.4

[grid]
horizon = 12.0
slow_factor = 3

[model]
hidden = 6
repr = 3
head_hidden = 6
support_k = 1

[training]
epochs = 3
patience = 2
seeds = [0, 1]
"#;

fn without_timing(path: &Path) -> serde_json::Value {
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("timing");
    doc
}

#[test]
fn gen_synth_train_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.toml"), SMALL).unwrap();
    ok(&multifit(&["gen-synth", "-c", "small.toml", "-o", "synth"], d));
    assert!(d.join("synth/data.csv").exists() && d.join("synth/labels.csv").exists());

    let csv_source = [
        "--set",
        "data.source=\"long_csv\"",
        "--set",
        "data.path=\"synth/data.csv\"",
        "--set",
        "data.labels=\"synth/labels.csv\"",
    ];
    let mut args = vec!["train", "-c", "small.toml", "-o", "run"];
    args.extend(csv_source);
    ok(&multifit(&args, d));
    let trained = without_timing(&d.join("run/results.json"));
    assert_eq!(trained["runs"].as_array().unwrap().len(), 2);
    assert!(d.join("run/models/fit-seed0.json").exists());

    ok(&multifit(&["evaluate", "--run-dir", "run"], d));
    let evaluated = without_timing(&d.join("run/evaluation.json"));
    for k in 0..2 {
        assert_eq!(evaluated["runs"][k]["test"], trained["runs"][k]["test"]);
    }

    // synthetic source directly gives the same records as the CSV export
    ok(&multifit(&["train", "-c", "small.toml", "-o", "direct"], d));
    let direct = without_timing(&d.join("direct/results.json"));
    assert_eq!(direct["runs"], trained["runs"]);
}

#[test]
fn rerun_is_identical_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.toml"), SMALL).unwrap();
    let args = ["train", "-c", "small.toml", "-o", "run", "--set", "model.kind=\"multi-fit-v\""];
    ok(&multifit(&args, d));
    let first = std::fs::read_to_string(d.join("run/results.json")).unwrap();
    ok(&multifit(&args, d));
    let second = std::fs::read_to_string(d.join("run/results.json")).unwrap();
    let strip = |text: &str| text.lines().filter(|l| !l.contains("seconds")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&first), strip(&second));
    assert!(first.contains("\"timing\""));
}

#[test]
fn misspelled_key_fails_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "[training]\npatiense = 3\n").unwrap();
    let out = multifit(&["train", "-c", "bad.toml"], d);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("patiense") && err.contains("[config]"), "{err}");

    let out = multifit(&["train", "--set", "model.kindd=\"fit\""], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kindd"));
}

#[test]
fn missing_input_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = multifit(&["train", "-c", "nowhere.toml"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.toml"));

    let out = multifit(
        &["train", "--set", "data.source=\"long_csv\"", "--set", "data.path=\"gone.csv\"", "--set", "data.labels=\"l.csv\""],
        d,
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gone.csv"));
}

#[test]
fn prepare_data_then_train_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.toml"), SMALL).unwrap();
    ok(&multifit(&["prepare-data", "-c", "small.toml", "-o", "cache"], d));
    assert!(d.join("cache/manifest.toml").exists() && d.join("cache/features.bin").exists());
    ok(&multifit(
        &["train", "-c", "small.toml", "-o", "run", "--set", "data.source=\"cache\"", "--set", "data.path=\"cache\""],
        d,
    ));
    let from_cache = without_timing(&d.join("run/results.json"));
    ok(&multifit(&["train", "-c", "small.toml", "-o", "raw", "--set", "training.seeds=[0]"], d));
    let from_raw = without_timing(&d.join("raw/results.json"));
    // the cache stores the seed-0 split and features
    assert_eq!(from_cache["runs"][0]["test"], from_raw["runs"][0]["test"]);

    let bin = d.join("cache/features.bin");
    let mut bytes = std::fs::read(&bin).unwrap();
    let n = bytes.len();
    bytes[n / 2] ^= 0xff;
    std::fs::write(&bin, bytes).unwrap();
    let out = multifit(&["train", "-c", "small.toml", "--set", "data.source=\"cache\"", "--set", "data.path=\"cache\""], d);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn sweep_writes_one_row_per_cell_plus_medians() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.toml"), SMALL).unwrap();
    ok(&multifit(
        &[
            "sweep-missingness",
            "-c",
            "small.toml",
            "-o",
            "sweep",
            "--set",
            "sweep.fractions=[0.0, 0.5]",
            "--set",
            "sweep.models=[\"ba-mean\", \"fit\"]",
        ],
        d,
    ));
    let text = std::fs::read_to_string(d.join("sweep/sweep.csv")).unwrap();
    let mut rdr = csv_lines(&text);
    let header = rdr.remove(0);
    assert!(header.starts_with("model,fraction,seed,row,test_macro_f"));
    assert_eq!(rdr.len(), 2 * 2 * 2 + 2 * 2);
    assert_eq!(rdr.iter().filter(|l| l.contains(",median,")).count(), 4);

    // the fraction-0 cell reproduces a plain run
    ok(&multifit(&["train", "-c", "small.toml", "-o", "plain", "--set", "model.kind=\"fit\"", "--set", "training.seeds=[0]"], d));
    let plain = without_timing(&d.join("plain/results.json"));
    let f = plain["runs"][0]["test"]["macro"]["f1"].as_f64().unwrap();
    let row = rdr.iter().find(|l| l.starts_with("fit,0.0,0,")).expect("fit row");
    let cell: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert_eq!(cell, f);
}

fn csv_lines(text: &str) -> Vec<String> {
    text.lines().map(str::to_string).collect()
}

#[test]
#[ignore = "full default-size run; several minutes of CPU"]
fn defaults_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&multifit(&["gen-synth", "-o", "synth"], d));
    ok(&multifit(&["train", "-o", "run"], d));
    ok(&multifit(&["evaluate", "--run-dir", "run"], d));
}
