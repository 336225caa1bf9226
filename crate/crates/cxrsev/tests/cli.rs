use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cxrsev::manifest::sha256_hex;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cxrsev"))
}

fn quickstart() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/quickstart")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn text(o: &Output) -> (String, String) {
    (String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

#[test]
fn report_reproduces_reference_outputs() {
    let q = quickstart();
    let (features, labels) = (q.join("features.csv"), q.join("labels.csv"));
    let before = [sha256_hex(&fs::read(&features).unwrap()), sha256_hex(&fs::read(&labels).unwrap())];

    let out = tempfile::tempdir().unwrap();
    let o = run(&["report", "--features", s(&features), "--labels", s(&labels), "--out", s(out.path()), "--date", "2020-05-01"]);
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));

    let dir = out.path().join("2020-05-01");
    for name in [
        "table.md",
        "table.csv",
        "kappa.txt",
        "cohort.txt",
        "scatter.csv",
        "scatter_opacity.csv",
        "repetitions.csv",
        "embedding.csv",
        "model_extent.txt",
    ] {
        let got = fs::read(dir.join(name)).unwrap();
        let want = fs::read(q.join("reference").join(name)).unwrap();
        assert!(got == want, "{name} differs from the reference");
    }

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["seed"], 2020);
    assert_eq!(manifest["inputs"][0]["sha256"], before[0].as_str());
    assert!(manifest["failures"].as_array().unwrap().is_empty());

    let after = [sha256_hex(&fs::read(&features).unwrap()), sha256_hex(&fs::read(&labels).unwrap())];
    assert_eq!(before, after, "inputs were modified");
}

#[test]
fn fit_and_saliency_match_reference() {
    let q = quickstart();
    let out = tempfile::tempdir().unwrap();
    let model = out.path().join("model.txt");
    let o = run(&[
        "fit",
        "--features",
        s(&q.join("features.csv")),
        "--labels",
        s(&q.join("labels.csv")),
        "--feature-set",
        "pneumonia4",
        "--target",
        "extent",
        "--out",
        s(&model),
    ]);
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
    assert_eq!(fs::read(&model).unwrap(), fs::read(q.join("reference/model_pneumonia4_extent.txt")).unwrap());

    let pgm = out.path().join("s.pgm");
    let o = run(&["saliency", "--model", s(&model), "--grads-dir", s(&q.join("grads")), "--image-id", "img002", "--out", s(&pgm)]);
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
    assert_eq!(fs::read(&pgm).unwrap(), fs::read(q.join("reference/img002_saliency.pgm")).unwrap());
}

#[test]
fn malformed_features_name_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(quickstart().join("features.csv")).unwrap();
    let mut lines: Vec<String> = src.lines().take(6).map(|l| l.split(',').take(24).collect::<Vec<_>>().join(",")).collect();
    let mut cells: Vec<&str> = lines[3].split(',').collect();
    cells[8] = "oops";
    lines[3] = cells.join(",");
    let path = dir.path().join("bad.csv");
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let o = run(&["validate", "--features", s(&path)]);
    let (_, err) = text(&o);
    assert_eq!(o.status.code(), Some(2), "{err}");
    assert!(err.contains("line 4") && err.contains("out_infiltration"), "{err}");
}

#[test]
fn validate_accepts_quickstart() {
    let q = quickstart();
    let o = run(&[
        "validate",
        "--features",
        s(&q.join("features.csv")),
        "--labels",
        s(&q.join("labels.csv")),
        "--grads-dir",
        s(&q.join("grads")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{:?}", text(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["evaluate", "--ratio", "1.5"]).status.code(), Some(1));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_input_exits_two() {
    let o = run(&["cohort", "--features", "/nonexistent/features.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_prints_one_row() {
    let q = quickstart();
    let o = run(&[
        "evaluate",
        "--features",
        s(&q.join("features.csv")),
        "--labels",
        s(&q.join("labels.csv")),
        "--feature-set",
        "opacity1",
        "--target",
        "extent",
        "--reps",
        "5",
    ]);
    let (out, err) = text(&o);
    assert_eq!(o.status.code(), Some(0), "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    assert!(lines[2].starts_with("| Geographic Extent | \"lung opacity\" output | 1+1 |"), "{out}");
}

#[test]
fn intermediate_row_skipped_without_block() {
    let q = quickstart();
    let dir = tempfile::tempdir().unwrap();
    // Keep the metadata and the 18 outputs only.
    let src = fs::read_to_string(q.join("features.csv")).unwrap();
    let trimmed: String = src.lines().map(|l| l.split(',').take(24).collect::<Vec<_>>().join(",") + "\n").collect();
    let path = dir.path().join("outputs_only.csv");
    fs::write(&path, trimmed).unwrap();

    let o = run(&["evaluate", "--features", s(&path), "--labels", s(&q.join("labels.csv")), "--target", "opacity", "--reps", "3"]);
    let (out, err) = text(&o);
    assert_eq!(o.status.code(), Some(0), "{err}");
    let skipped: Vec<&str> = out.lines().filter(|l| l.contains("skipped: features absent")).collect();
    assert_eq!(skipped.len(), 1, "{out}");
    assert!(skipped[0].contains("1024+1"));
    assert_eq!(out.lines().count(), 2 + 5);
}
