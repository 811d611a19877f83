use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn grouprec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grouprec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("JSON error record");
    serde_json::from_str(line).unwrap()
}

/// Twelve users in two taste camps over twenty items, plus a group file.
fn small_dataset(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let mut ratings = String::from("user,item,rating\n");
    for u in 0..12u32 {
        for i in 0..20u32 {
            if (u * 7 + i * 3) % 5 == 0 {
                continue;
            }
            let fan = i % 2 == u % 2;
            let r = if fan { 4 + (u + i) % 2 } else { 1 + (u + i) % 3 };
            ratings.push_str(&format!("u{u},i{i},{r}\n"));
        }
    }
    let mut groups = String::from("user,group\n");
    let mut tags = String::from("item,tag\n");
    for u in 0..12u32 {
        groups.push_str(&format!("u{u},{}\n", if u % 2 == 0 { "even" } else { "odd" }));
    }
    for i in 0..20u32 {
        tags.push_str(&format!("i{i},{}\n", if i % 2 == 0 { "drama" } else { "comedy" }));
    }
    let paths = (dir.join("ratings.csv"), dir.join("groups.csv"), dir.join("tags.csv"));
    fs::write(&paths.0, ratings).unwrap();
    fs::write(&paths.1, groups).unwrap();
    fs::write(&paths.2, tags).unwrap();
    paths
}

struct Fixture {
    _tmp: TempDir,
    root: PathBuf,
    base: Vec<String>,
}

fn fixture() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let (r, g, t) = small_dataset(&root);
    let base = [
        "--dataset",
        r.to_str().unwrap(),
        "--format",
        "generic",
        "--groups-file",
        g.to_str().unwrap(),
        "--tags-file",
        t.to_str().unwrap(),
        "--grouping",
        "explicit",
        "--k",
        "8",
        "--list-length",
        "15",
        "--recall-ks",
        "5,10",
        "--folds",
        "3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    Fixture { _tmp: tmp, root, base }
}

impl Fixture {
    fn run(&self, out: &str, extra: &[&str]) -> (Output, PathBuf) {
        let dir = self.root.join(out);
        let mut args: Vec<&str> = self.base.iter().map(String::as_str).collect();
        args.extend(["--out", dir.to_str().unwrap()]);
        args.extend(extra);
        (grouprec(&args), dir)
    }
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn anonymity_report_reaches_group_size() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("anon");
    let out = grouprec(&[
        "--out",
        dir.to_str().unwrap(),
        "anonymity-report",
        "--group-size",
        "10",
        "--items",
        "5",
        "--t-max",
        "5000",
    ]);
    ok(&out);
    let v = read_json(&dir.join("anonymity.json"));
    assert_eq!(v["n_prime"], 20);
    let series = v["series"].as_array().unwrap();
    assert_eq!(series[0]["t"], 0);
    assert!((series[0]["effective_size"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let last = series.last().unwrap();
    assert_eq!(last["t"], 5000);
    assert!(last["effective_size"].as_f64().unwrap() >= 9.9);
    let sizes: Vec<f64> = series.iter().map(|p| p["effective_size"].as_f64().unwrap()).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    let m = read_json(&dir.join("manifest.json"));
    assert_eq!(m["command"], "anonymity-report");
    assert_eq!(m["outputs"][0], "anonymity.json");
}

#[test]
fn zero_deadline_leaves_matrices_unchanged() {
    let f = fixture();
    let (out, dir) = f.run("ex0", &["--t-threshold", "0", "simulate-exchange", "--group", "odd"]);
    ok(&out);
    let padded = fs::read(dir.join("padded.json")).unwrap();
    assert_eq!(padded, fs::read(dir.join("exchanged.json")).unwrap());
    assert_eq!(fs::read_to_string(dir.join("events.csv")).unwrap(), "");
    let v = read_json(&dir.join("padded.json"));
    assert_eq!(v["group"], "odd");
    assert_eq!(v["members"].as_array().unwrap().len(), 6);
}

#[test]
fn exchange_conserves_mass() {
    let f = fixture();
    let (out, dir) = f.run("ex", &["--t-threshold", "5", "simulate-exchange"]);
    ok(&out);
    let before = read_json(&dir.join("padded.json"));
    let after = read_json(&dir.join("exchanged.json"));
    assert_eq!(before["total"], after["total"]);
    assert_ne!(before["members"], after["members"]);
    let events = fs::read_to_string(dir.join("events.csv")).unwrap();
    assert!(events.starts_with("time,initiator,partner,item_x,item_y\n"));
}

#[test]
fn aggregate_graph_and_recommend() {
    let f = fixture();
    let (out, dir) = f.run("agg", &["aggregate"]);
    ok(&out);
    let top = read_json(&dir.join("topk.json"));
    let groups = top.as_array().unwrap();
    assert_eq!(groups.len(), 2);
    for g in groups {
        let items = g["items"].as_array().unwrap();
        assert!(!items.is_empty() && items.len() <= 8);
        assert_eq!(items[0]["rank"], 1);
    }
    // the even camp likes even items
    let even = groups.iter().find(|g| g["group"] == "even").unwrap();
    let first: u32 = even["items"][0]["item"].as_str().unwrap()[1..].parse().unwrap();
    assert_eq!(first % 2, 0);

    let (out, dir) = f.run("graph", &["build-graph"]);
    ok(&out);
    let edges = fs::read_to_string(dir.join("edges.csv")).unwrap();
    assert!(edges.starts_with("src_type,src_id,dst_type,dst_id,weight\n"));
    assert!(edges.contains("item,i0,tag,drama,1"));
    let g = read_json(&dir.join("graph.json"));
    assert_eq!(g["edges"].as_u64().unwrap() as usize, edges.lines().count() - 1);

    let (out, dir) = f.run("rec", &["recommend", "--user", "u0", "--top", "5"]);
    ok(&out);
    let r = read_json(&dir.join("recommendations.json"));
    assert_eq!(r["converged"], true);
    let items = r["items"].as_array().unwrap();
    assert!(items.len() <= 5);
    let rated: Vec<String> = (0..20u32)
        .filter(|i| (i * 3) % 5 != 0)
        .map(|i| format!("i{i}"))
        .collect();
    for it in items {
        assert!(!rated.contains(&it["item"].as_str().unwrap().to_string()));
    }

    let (out, dir) = f.run("rec2", &["recommend", "--user", "u3", "--method", "personal_baseline"]);
    ok(&out);
    assert_eq!(read_json(&dir.join("recommendations.json"))["method"], "personal_baseline");
}

#[test]
fn evaluate_is_reproducible_from_manifest() {
    let f = fixture();
    let (out, a) = f.run("eval-a", &["evaluate"]);
    ok(&out);
    let report = read_json(&a.join("report.json"));
    assert_eq!(report["label"], "group_private:explicit");
    assert_eq!(report["folds"].as_array().unwrap().len(), 3);

    // replay from the recorded config alone
    let manifest = read_json(&a.join("manifest.json"));
    let b = f.root.join("eval-b");
    let mut config = manifest["config"].clone();
    config["output_dir"] = Value::String(b.to_str().unwrap().into());
    let cfg_path = f.root.join("replay.json");
    fs::write(&cfg_path, config.to_string()).unwrap();
    let out = grouprec(&["--config", cfg_path.to_str().unwrap(), "evaluate"]);
    ok(&out);
    assert_eq!(fs::read(a.join("report.csv")).unwrap(), fs::read(b.join("report.csv")).unwrap());

    let (out, c) = f.run("eval-c", &["evaluate", "--method", "personal_baseline"]);
    ok(&out);
    assert_eq!(read_json(&c.join("report.json"))["label"], "personal_baseline");
}

#[test]
fn range_error_names_parameter() {
    let tmp = tempfile::tempdir().unwrap();
    let out = grouprec(&["--theta-p", "1.5", "--out", tmp.path().to_str().unwrap(), "aggregate"]);
    assert_eq!(out.status.code(), Some(2));
    let rec = stderr_record(&out);
    assert_eq!(rec["error"]["kind"], "config");
    assert_eq!(rec["error"]["param"], "aggregation.theta_p");
}

#[test]
fn unknown_config_key_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"rank": {"beta": 0.5}}"#).unwrap();
    let out = grouprec(&["--config", cfg.to_str().unwrap(), "aggregate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_record(&out)["error"]["param"], "config");
}

#[test]
fn unknown_command_exits_two() {
    let out = grouprec(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_record(&out)["error"]["kind"], "usage");
}

#[test]
fn missing_dataset_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = grouprec(&["--out", tmp.path().to_str().unwrap(), "aggregate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_record(&out)["error"]["kind"], "usage");
    assert!(tmp.path().join("error.json").exists());
}

#[test]
fn bad_data_is_runtime_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let r = tmp.path().join("r.csv");
    fs::write(&r, "user,item,rating\nu1,i1,4\nu1,i2,9\n").unwrap();
    let out = grouprec(&[
        "--dataset",
        r.to_str().unwrap(),
        "--format",
        "generic",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
        "aggregate",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_record(&out)["error"]["kind"], "data_integrity");
}
