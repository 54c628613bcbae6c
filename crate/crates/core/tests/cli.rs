use std::path::Path;
use std::process::{Command, Output};

fn edgecache(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgecache")).current_dir(dir).args(args).output().unwrap()
}

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = String::new();
    for i in 0..400u64 {
        let key = (i * 7 + i / 11) % 23;
        lines += &format!("{i} {key} {}\n", 1 + key % 4);
    }
    std::fs::write(dir.path().join("trace.txt"), lines).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_and_usage_errors() {
    let dir = fixture();
    assert_eq!(edgecache(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(edgecache(dir.path(), &["simulate"]).status.code(), Some(1));
    let unknown = edgecache(dir.path(), &["simulate", "--policy", "fifo", "--capacity", "5", "--trace", "trace.txt"]);
    assert_eq!(unknown.status.code(), Some(1));
    let bad = edgecache(dir.path(), &["simulate", "--policy", "lru", "--capacity", "5", "--trace", "trace.txt", "--decay", "2"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = fixture();
    let missing = edgecache(dir.path(), &["stats", "nope.txt"]);
    assert_eq!(missing.status.code(), Some(2));
    std::fs::write(dir.path().join("bad.txt"), "0 1 100\n1 1 200\n").unwrap();
    let o = edgecache(dir.path(), &["stats", "bad.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert!(edgecache(dir.path(), &["--lenient", "stats", "bad.txt"]).status.success());
}

#[test]
fn simulate_writes_json_or_csv() {
    let dir = fixture();
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&edgecache(dir.path(), &["simulate", "--policy", "s4lru", "--capacity", "8", "--trace", "trace.txt", "--no-warmup"])))
            .unwrap();
    assert_eq!(json["policy"], "s4lru");
    assert_eq!(json["measured_requests"], 400);
    assert!(json.get("wall_time").is_none());

    let timed: serde_json::Value = serde_json::from_str(&stdout(&edgecache(
        dir.path(),
        &["simulate", "--policy", "lru", "--capacity", "8", "--trace", "trace.txt", "--timing"],
    )))
    .unwrap();
    assert!(timed["wall_time"].is_number());

    stdout(&edgecache(dir.path(), &["simulate", "--policy", "lru", "--capacity", "8", "--trace", "trace.txt", "-o", "r.csv"]));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("policy,capacity,"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn compare_reports_reduction_for_each_policy() {
    let dir = fixture();
    let out = edgecache(
        dir.path(),
        &["compare", "--policies", "lru,belady,hrcache", "--capacities", "6,10", "--trace", "trace.txt", "--min-labels", "10"],
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["reports"].as_array().unwrap().len(), 6);
    let reductions = json["traffic_reduction_vs_lru"].as_array().unwrap();
    assert_eq!(reductions.len(), 6);
    assert!(reductions.iter().any(|r| r["policy"] == "belady" && r["percent"].as_f64().unwrap() >= 0.0));
    let no_lru = edgecache(dir.path(), &["compare", "--policies", "s4lru", "--capacities", "6", "--trace", "trace.txt"]);
    assert_eq!(no_lru.status.code(), Some(1));
}

#[test]
fn labels_train_and_predict_chain() {
    let dir = fixture();
    let d = dir.path();
    let labels = stdout(&edgecache(d, &["label-dump", "--trace", "trace.txt", "--capacity", "15", "--features-csv", "rows.csv"]));
    let first: serde_json::Value = serde_json::from_str(labels.lines().next().unwrap()).unwrap();
    for field in ["index", "key", "hro_hit", "hit_fraction", "cache_friendly"] {
        assert!(first.get(field).is_some(), "{field}");
    }
    let rows = std::fs::read_to_string(d.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), labels.lines().count() + 1);

    stdout(&edgecache(d, &["train", "--data", "rows.csv", "-o", "model.json", "--n-trees", "5", "--min-samples-leaf", "2"]));
    let model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["version"], 1);

    let preds = stdout(&edgecache(d, &["predict", "--model", "model.json", "--data", "rows.csv"]));
    let mut lines = preds.lines();
    assert_eq!(lines.next(), Some("probability"));
    let probs: Vec<f64> = lines.map(|l| l.parse().unwrap()).collect();
    assert_eq!(probs.len(), labels.lines().count());
    assert!(probs.iter().all(|p| *p > 0.0 && *p < 1.0));
}

#[test]
fn bound_and_hazard_dumps() {
    let dir = fixture();
    let d = dir.path();
    let b: serde_json::Value =
        serde_json::from_str(&stdout(&edgecache(d, &["bound", "--mode", "hrfc", "--capacity", "6", "--trace", "trace.txt"]))).unwrap();
    assert_eq!(b["mode"], "hrfc");
    let p = b["byte_hit_probability"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    let unequal = edgecache(d, &["bound", "--mode", "hre", "--capacity", "6", "--trace", "trace.txt"]);
    assert_eq!(unequal.status.code(), Some(2));

    let h: serde_json::Value = serde_json::from_str(&stdout(&edgecache(
        d,
        &["estimate-hazard", "--key", "3", "--trace", "trace.txt", "--hazard-mode", "kernel"],
    )))
    .unwrap();
    assert_eq!(h["key"], 3);
    assert!(h["samples"].as_u64().unwrap() > 0);
    assert!(h["estimator"].to_string().contains("bandwidth"));
}

#[test]
fn gen_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"{"n_objects": 50, "n_requests": 500, "popularity_alpha": 0.8,
        "interarrival": {"poisson": {"rate": 1.0}}, "size_model": {"constant": {"bytes": 1}}, "seed": 3}"#;
    std::fs::write(d.join("cfg.json"), cfg).unwrap();
    stdout(&edgecache(d, &["gen", "cfg.json", "-o", "t.txt"]));
    let s: serde_json::Value = serde_json::from_str(&stdout(&edgecache(d, &["stats", "t.txt"]))).unwrap();
    assert_eq!(s["total_requests"], 500);
    assert_eq!(s["unique_bytes"], s["unique_objects"]);
}
