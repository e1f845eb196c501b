use std::path::Path;
use std::process::{Command, Output};

fn fellprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fellprop"))
        .args(args)
        .env_remove("FELLPROP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn validates_named_towers() {
    for name in ["t2", "t2x", "car3", "ladder4"] {
        let o = fellprop(&["tower", "validate", name]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!(v.is_object());
    }
}

#[test]
fn rejects_a_broken_tower_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    // column sums of the multiplicity matrix do not reproduce the level-1 dims
    std::fs::write(
        &path,
        r#"{"levels": [[1], [2, 1]], "mults": [[[1], [1]]], "top_trace": [0.25, 0.5]}"#,
    )
    .unwrap();
    let o = fellprop(&["tower", "validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL"));
}

#[test]
fn unknown_tower_is_an_error() {
    let o = fellprop(&["af", "certify", "--tower", "nope", "--ideal", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn bound_table_is_nonincreasing() {
    let o = fellprop(&["af", "bound", "--levels", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let bounds: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["bound"].as_f64().unwrap()).collect();
    assert_eq!(bounds.len(), 6);
    assert!(bounds.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn converge_writes_csv() {
    let o = fellprop(&[
        "af", "converge", "--tower", "ladder4", "--limit", "1", "--ideal", "1,2", "--ideal", "1", "--format", "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,N_k,beta_N,x_N,bound,surrogate_distance"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn out_file_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = fellprop(&["comm", "repair", "--trials", "4", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn out_dir_environment_sets_the_default_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fellprop"))
        .args(["triples", "check", "--samples", "50", "--format", "csv"])
        .env("FELLPROP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let written = dir.path().join("triple_check.csv");
    assert!(Path::new(&written).exists());
    assert!(std::fs::read_to_string(written).unwrap().starts_with("case,inequality,"));
}

#[test]
fn run_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"mode": "comm_ball_haus", "space": "line3", "subsets": [[["0"], ["0.1"]]], "samples": 8, "seed": 3}"#,
    )
    .unwrap();
    let o = fellprop(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mode"], "comm_ball_haus");

    std::fs::write(&cfg, r#"{"mode": "af_certificates"}"#).unwrap();
    let o = fellprop(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tower"));

    let o = fellprop(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ball_haus_pair_syntax() {
    let o = fellprop(&["comm", "ball-haus", "--space", "line3", "--pair", "0,1|0.1", "--samples", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = fellprop(&["comm", "ball-haus", "--space", "line3", "--pair", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lseminorm_of_the_unit_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.json");
    let one = fellprop::Element::identity(fellprop::fixtures::t2_tower().top_shape());
    std::fs::write(&path, serde_json::to_string(&one).unwrap()).unwrap();
    let o = fellprop(&["af", "lseminorm", "--tower", "t2", "--element", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["l_seminorm"].as_f64().unwrap() <= 1e-12);
}
