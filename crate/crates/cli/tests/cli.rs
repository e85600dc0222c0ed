use std::path::Path;
use std::process::{Command, Output};

fn vnom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnom")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

/// Rows of the first CSV table after the metadata block, without the header.
fn rows(text: &str) -> Vec<Vec<String>> {
    vnom::io::data_section(text)
        .lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn baseline_prints_enumerated_value() {
    let o = vnom(&["baseline", "--candidates", "4", "--reds", "1", "--criterion", "mrr"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.5208333333333333).abs() < 1e-15);
    assert!(stderr(&o).contains("exact"));
}

#[test]
fn analytic_columns_sum_to_one() {
    let o = vnom(&["analytic", "--n", "6", "--m", "3", "--m-prime", "2"]);
    assert!(o.status.success());
    let table = rows(&stdout(&o));
    for col in 1..=4 {
        let sum: f64 = table.iter().map(|r| r[col].parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9, "column {col} sums to {sum}");
    }
}

#[test]
fn analytic_reports_simulation_distances() {
    let o = vnom(&["analytic", "--n", "20", "--m", "8", "--m-prime", "3", "--samples", "5000", "--seed", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let tail = text.split("statistic,tv_distance\n").nth(1).unwrap();
    let distances: Vec<f64> = tail.lines().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(distances.len(), 4);
    assert!(distances.iter().all(|&d| d < 0.06));
}

#[test]
fn sweep_preset_row_count() {
    let o = vnom(&["sweep", "--replicates", "4", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    // 10 values of m, 3 weights, 3 criteria.
    assert_eq!(rows(&stdout(&o)).len(), 10 * 3 * 3);
}

#[test]
fn golden_outputs() {
    let cases: [(&str, &[&str]); 4] = [
        ("sweep_tiny.csv", &["sweep", "--n", "30", "--m-list", "6,10", "--replicates", "8", "--gammas", "0,0.5,1", "--seed", "2024"]),
        ("analytic_tiny.csv", &["analytic", "--n", "6", "--m", "3", "--m-prime", "2"]),
        ("surface_tiny.csv", &["surface", "--n", "30", "--m", "8", "--m-prime", "4", "--gamma-points", "5", "--replicates", "8", "--seed", "7"]),
        (
            "surrogate_tiny.txt",
            &[
                "surrogate", "--n", "12", "--k", "3", "--density", "0.3", "--groups", "1", "--group-size", "4",
                "--group-density", "0.8", "--group-topics", "1", "--seed", "3",
            ],
        ),
    ];
    for (file, args) in cases {
        let o = vnom(args);
        assert!(o.status.success(), "{file}: {}", stderr(&o));
        assert_eq!(stdout(&o), golden(file), "{file}");
    }
}

#[test]
fn metadata_echoes_configuration() {
    let o = vnom(&["sweep", "--n", "30", "--m-list", "6", "--replicates", "3", "--seed", "12"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# command: sweep"));
    assert_eq!(lines.next(), Some("# seed: 12"));
    let config = lines.next().unwrap().strip_prefix("# config: ").unwrap();
    let v: serde_json::Value = serde_json::from_str(config).unwrap();
    assert_eq!(v["replicates"], 3);
    assert_eq!(v["model"]["n"], 30);
}

#[test]
fn missing_seed_is_generated_and_reproducible() {
    let args = ["sweep", "--n", "30", "--m-list", "6", "--replicates", "3"];
    let o = vnom(&args);
    assert!(o.status.success());
    let seed = stderr(&o).lines().find_map(|l| l.strip_prefix("seed: ")).unwrap().to_owned();
    let mut again: Vec<&str> = args.to_vec();
    again.extend(["--seed", &seed]);
    let r = vnom(&again);
    assert_eq!(vnom::io::data_section(&stdout(&o)), vnom::io::data_section(&stdout(&r)));
}

#[test]
fn exit_codes() {
    let unknown = vnom(&["sweep", "--bogus"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(stderr(&unknown).contains("Usage"));
    assert_eq!(vnom(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(vnom(&["simulate", "--n", "10", "--m", "12", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(vnom(&["baseline", "--candidates", "3", "--reds", "4"]).status.code(), Some(1));
    let missing = vnom(&["importance", "--graph", "/definitely/not/here.txt", "--seed", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "#n=3\n#k=2\ne 0 1 1 0.5 0.3\n").unwrap();
    let invalid = vnom(&["importance", "--graph", bad.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(invalid.status.code(), Some(1));
    assert!(stderr(&invalid).contains("line 3"));
    assert!(vnom(&["--help"]).status.success());
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let o = vnom(&["simulate", "--n", "40", "--m", "10", "--m-prime", "4", "--seed", "5", "--graph-out", graph.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(rows(&stdout(&o)).len(), 3);
    let g = vnom::io::read_attributed_graph(&graph).unwrap();
    assert_eq!(g.red_set().len(), 10);

    let e = vnom(&["estimate", "--graph", graph.to_str().unwrap(), "--format", "json"]);
    assert!(e.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&e)).unwrap();
    let s1 = doc["result"]["s_hat_1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&s1));
    assert!(doc["metadata"]["seed"].is_null());
}

#[test]
fn surrogate_feeds_importance() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    let out = dir.path().join("bins.csv");
    let est = dir.path().join("est.csv");
    assert!(vnom(&["surrogate", "--seed", "4", "--out", corpus.to_str().unwrap()]).status.success());
    let o = vnom(&[
        "importance", "--graph", corpus.to_str().unwrap(), "--attempts", "20000", "--replicates", "2",
        "--gammas", "0,0.5,1", "--seed", "6", "--out", out.to_str().unwrap(), "--estimate-out", est.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = rows(&std::fs::read_to_string(&out).unwrap());
    assert!(!table.is_empty());
    for r in &table {
        let partitions: usize = r[4].parse().unwrap();
        assert_eq!(r[5] == "true", partitions < 20);
        assert!(r[7].parse::<f64>().is_ok(), "fusion statistic present");
    }
    assert!(!rows(&std::fs::read_to_string(&est).unwrap()).is_empty());
}

#[test]
fn json_documents_parse() {
    let o = vnom(&["sweep", "--n", "30", "--m-list", "6,10", "--replicates", "3", "--seed", "1", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["metadata"]["command"], "sweep");
    assert_eq!(doc["result"]["cells"].as_array().unwrap().len(), 2);
}
