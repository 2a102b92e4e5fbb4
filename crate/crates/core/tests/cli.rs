use std::path::Path;
use std::process::{Command, Output};

fn radiomap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radiomap")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn phantoms(dir: &Path, n: &str) {
    let o = radiomap(&["phantom", "images", "--n-pos", n, "--n-neg", n, "--size", "16", "--seed", "5", "--out", p(dir)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

fn write_scores(path: &Path, rows: &[(&str, f64, u8)]) {
    let mut text = String::from("case_id,score,label\n");
    for (id, s, l) in rows {
        text += &format!("{id},{s},{l}\n");
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&radiomap(&[])), 1);
    assert_eq!(code(&radiomap(&["frobnicate"])), 1);
    assert_eq!(code(&radiomap(&["select", "--threads", "0", "--table", "x.csv"])), 1);
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "1");
    let out = dir.path().join("maps");
    let even = radiomap(&["map", "--input", p(dir.path()), "--kernel", "4", "--out", p(&out)]);
    assert_eq!(code(&even), 1, "{}", String::from_utf8_lossy(&even.stderr));
    let shape = radiomap(&["map", "--input", p(dir.path()), "--features", "shape_Sphericity", "--out", p(&out)]);
    assert_eq!(code(&shape), 1);
    let bad_cfg = dir.path().join("cfg.json");
    std::fs::write(&bad_cfg, r#"{"nonsense": 1}"#).unwrap();
    assert_eq!(code(&radiomap(&["select", "--config", p(&bad_cfg)])), 1);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&radiomap(&["select", "--table", p(&missing), "--out", p(dir.path())])), 1);
    let broken = dir.path().join("broken.csv");
    std::fs::write(&broken, "case_id,label,lesion_size_voxels,f\nx,7,0,1.0\n").unwrap();
    assert_eq!(code(&radiomap(&["select", "--table", p(&broken), "--out", p(dir.path())])), 2);

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_scores(&a, &[("x", 0.1, 0), ("y", 0.9, 1)]);
    write_scores(&b, &[("x", 0.1, 0), ("z", 0.9, 1)]);
    let o = radiomap(&["eval", "--scores", p(&a), "--scores", p(&b), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn identical_score_files_give_p_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let rows = [("c1", 0.1, 0), ("c2", 0.4, 0), ("c3", 0.35, 1), ("c4", 0.8, 1)];
    write_scores(&a, &rows);
    write_scores(&b, &rows);
    let o = radiomap(&["eval", "--scores", p(&a), "--scores", p(&b), "--n-perm", "200", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(report["comparison"]["p_value"], 1.0);
    assert_eq!(report["models"][0]["auroc"], 0.75);
    assert!((report["models"][0]["ap"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);
}

#[test]
fn missing_mask_is_skipped_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "3");
    let labels = std::fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    let victim = labels.lines().nth(1).unwrap().split(',').next().unwrap().to_owned();
    std::fs::remove_file(dir.path().join(format!("{victim}_mask.nii.gz"))).unwrap();
    let out = dir.path().join("out");
    let o = radiomap(&[
        "extract",
        "--input",
        p(dir.path()),
        "--labels",
        p(&dir.path().join("labels.csv")),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&victim));
    let table = std::fs::read_to_string(out.join("features.csv")).unwrap();
    assert_eq!(table.lines().count(), labels.lines().count() - 1);
    assert!(!table.contains(&format!("\n{victim},")));
}

#[test]
fn map_writes_named_files_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "1");
    let run = |out: &Path, threads: &str| {
        let o = radiomap(&[
            "map",
            "--input",
            p(dir.path()),
            "--features",
            "glcm_Correlation,ngtdm_Strength",
            "--kernel",
            "3",
            "--threads",
            threads,
            "--out",
            p(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a, "1");
    run(&b, "3");
    let mut names: Vec<String> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 4);
    assert!(names.iter().all(|n| n.ends_with("_k3.nii")));
    assert!(names.iter().any(|n| n.ends_with("_glcm_Correlation_k3.nii")));
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n}");
    }
}

#[test]
fn select_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let o = radiomap(&[
        "phantom", "table", "--n-pos", "30", "--n-neg", "30", "--n-features", "15", "--seed", "2", "--out", p(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let table = dir.path().join("table.csv");
    let run = |out: &Path, threads: &str| {
        let o = radiomap(&[
            "select", "--table", p(&table), "--target", "3", "--folds", "5", "--seed", "9", "--threads", threads, "--out",
            p(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a, "1");
    run(&b, "2");
    for f in ["selection.json", "scores.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = radiomap(&["phantom", "table", "--n-pos", "20", "--n-neg", "20", "--n-features", "8", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0);
    let cfg = dir.path().join("cfg.json");
    let table = dir.path().join("table.csv");
    std::fs::write(&cfg, format!(r#"{{"table": "{}", "target": 5, "folds": 4}}"#, p(&table))).unwrap();
    let out = dir.path().join("o");
    let o = radiomap(&["select", "--config", p(&cfg), "--target", "2", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("selection.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["target"], 2);
    assert_eq!(report["config"]["folds"], 4);
}
