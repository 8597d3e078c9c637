use std::path::Path;
use std::process::{Command, Output};

fn cdst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdst")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json") && n != "manifest.json")
        .collect();
    names.sort();
    names
}

/// Column `name` of the single data row of a CSV printed to stdout.
fn csv_field(text: &str, name: &str) -> f64 {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    row[i].parse().unwrap()
}

#[test]
fn gen_graph_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = cdst(&["gen", "graph", "--k", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(json_files(dir.path()), ["graph_k5.adv.json", "graph_k5.json", "graph_k5.opt.json"]);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn gen_manhattan_terminal_count() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cdst(&["gen", "manhattan", "--k", "3", "--out", dir.path().to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(dir.path().join("manhattan_k3.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["terminals"].as_array().unwrap().len(), 19);
}

#[test]
fn gen_random_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = cdst(&["gen", "random", "--seed", "7", "--n", "20", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("random_s7_n20.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn bad_generator_parameters_are_usage_errors() {
    assert_eq!(cdst(&["gen", "graph", "--k", "1"]).status.code(), Some(2));
    assert_eq!(cdst(&["solve"]).status.code(), Some(2));
    assert_eq!(cdst(&["solve", "x.json", "--mu-policy", "fixed:-1"]).status.code(), Some(2));
}

#[test]
fn solve_reproduces_and_improves_the_worst_case() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(cdst(&["gen", "graph", "--k", "100", "--out", d]).status.success());
    let inst = format!("{d}/graph_k100.json");
    let base = format!("external:{d}/graph_k100.adv.json");
    let o = cdst(&["solve", &inst, "--reconnect", "lemma1", "--root", "keep", "--base", &base, "--mu-policy", "baseline"]);
    assert!(o.status.success());
    assert!((csv_field(&stdout(&o), "cost") - 403.0).abs() < 1e-6);

    let out = format!("{d}/run");
    let o = cdst(&["solve", &inst, "--reconnect", "split3", "--root", "improve", "--base", &base, "--out", &out]);
    assert!(o.status.success());
    let text = stdout(&o);
    let cost = csv_field(&text, "cost");
    assert!(cost < 403.0 && cost <= csv_field(&text, "bound"));
    for f in ["graph_k100.solution.json", "graph_k100.certificate.json", "graph_k100.trace.jsonl", "manifest.json"] {
        assert!(Path::new(&out).join(f).exists(), "{f}");
    }
}

#[test]
fn solve_with_config_file_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(cdst(&["gen", "graph", "--k", "2", "--out", d]).status.success());
    let cfg = format!("{d}/cfg.json");
    std::fs::write(&cfg, r#"{"base":"exact","reconnect":"split2","root_mode":"keep"}"#).unwrap();
    let o = cdst(&["solve", &format!("{d}/graph_k2.json"), "--config", &cfg, "--oracle"]);
    assert!(o.status.success());
    assert!((csv_field(&stdout(&o), "lower_bound") - 8.0).abs() < 1e-9);
}

#[test]
fn io_and_validation_exit_codes() {
    assert_eq!(cdst(&["solve", "/definitely/not/here.json"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"metric":{"kind":"l1","points":[[0,0]]},"root":0,"terminals":[3],"weights":{"3":1}}"#)
        .unwrap();
    assert_eq!(cdst(&["solve", bad.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn table1_default_and_variants() {
    let o = cdst(&["table1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for v in ["2.38630", "2.17371", "1.79497", "2.73042"] {
        assert!(text.contains(v), "{v}");
    }
    let o = cdst(&["table1", "--beta", "1.0", "--format", "csv"]);
    assert!(o.status.success());
    let values: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.rsplit(',').next().unwrap().to_string()).collect();
    assert_eq!(values, ["2.00000", "1.81650", "1.79497"]);
    let o = cdst(&["table1", "--b", "0.6667"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("1.81652"));
}

#[test]
fn compare_runs_with_oracle_and_on_empty_globs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for k in ["2", "3"] {
        assert!(cdst(&["gen", "graph", "--k", k, "--out", d]).status.success());
    }
    let o = cdst(&[
        "compare",
        &format!("{d}/*.json"),
        "--strategies",
        "lemma1:keep,split3:improve",
        "--companion",
        "adv",
        "--oracle",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 4 + 1);
    assert!(lines[1].starts_with("graph_k2,lemma1/keep"));
    assert!(lines[3].contains("oracle budget exceeded"));
    assert!(lines[5].starts_with("max,"));

    let o = cdst(&["compare", &format!("{d}/nothing*.json")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn verify_analysis_default_violation_and_scaling() {
    let o = cdst(&["verify-analysis"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = cdst(&["verify-analysis", "--b", "0.55"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).lines().any(|l| l.contains("phi3") && l.contains("VIOLATED")));

    let sup = |mu: &str| -> f64 {
        let o = cdst(&["verify-analysis", "--b", "0.6319661255310763", "--mu", mu]);
        let text = stdout(&o);
        let line = text.lines().find(|l| l.trim_start().starts_with("phi3:")).unwrap().to_string();
        line.split_whitespace().nth(2).unwrap().parse().unwrap()
    };
    assert!((sup("2.0") - 2.0 * sup("1.0")).abs() < 1e-3);
}
