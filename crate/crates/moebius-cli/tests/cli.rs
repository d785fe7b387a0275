use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn moebius(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moebius"))
        .args(args)
        .env("MOEBIUS_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn json_result(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).expect("json document");
    assert_eq!(doc["tool"], "moebius");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert!(doc["seed"].is_u64());
    assert!(doc["config"]["command"].is_object() || doc["config"]["command"].is_string());
    doc["result"].clone()
}

fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn error_report(out: &Output) -> Value {
    let err = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "one-line error, got {err}");
    serde_json::from_str(lines[0]).expect("machine-parsable error")
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect()
}

#[test]
fn one_one_count_at_four() {
    let dir = tempfile::tempdir().unwrap();
    let r = json_result(&moebius(dir.path(), &["count", "2", "1", "4"]));
    assert_eq!(strings(&r["N"]), ["1/8", "1/8", "3/8"]);
}

#[test]
fn odd_perimeter_sum_counts_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let r = json_result(&moebius(dir.path(), &["count", "0", "3", "1", "1", "1"]));
    assert!(strings(&r["N"]).is_empty());
}

#[test]
fn three_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for m in ["rec", "sym", "direct"] {
        let r = json_result(&moebius(dir.path(), &["count", "1", "3", "4", "2", "2", "--method", m]));
        seen.push(strings(&r["N"]));
    }
    assert!(!seen[0].is_empty());
    assert_eq!(seen[0], seen[1]);
    assert_eq!(seen[0], seen[2]);
}

#[test]
fn exit_codes_and_error_lines() {
    let dir = tempfile::tempdir().unwrap();
    let unstable = moebius(dir.path(), &["count", "0", "2", "1", "1"]);
    assert_eq!(unstable.status.code(), Some(1));
    assert_eq!(error_report(&unstable)["error"], "precondition");

    let arity = moebius(dir.path(), &["count", "2", "1", "4", "4"]);
    assert_eq!(arity.status.code(), Some(1));

    let usage = moebius(dir.path(), &["count", "2"]);
    assert_eq!(usage.status.code(), Some(1));
    error_report(&usage);

    let big = moebius(dir.path(), &["count", "8", "1", "4"]);
    assert_eq!(big.status.code(), Some(2));
    assert_eq!(error_report(&big)["exit"], 2);

    let reconstruction = moebius(dir.path(), &["table", "2", "3"]);
    assert_eq!(reconstruction.status.code(), Some(2));
}

#[test]
fn euler_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (header, rows) = csv_rows(&moebius(dir.path(), &["euler"]));
    assert_eq!(header, ["g", "n=0", "n=1", "n=2", "n=3", "n=4"]);
    let labels: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["0", "1/2", "1", "3/2", "2", "5/2"]);
    assert_eq!(rows[0][4], "1/2");
    assert_eq!(rows[2][2], "-1/24 - 1/24*b + 1/24*b^2");
    assert!(rows[0][1].is_empty() && rows[1][2].is_empty() && rows[2][1].is_empty());

    let r = json_result(&moebius(dir.path(), &["euler", "--format", "json"]));
    let cells = r["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 24);
    for c in cells {
        if c["two_g"].as_u64().unwrap() % 2 == 0 {
            assert_eq!(c["printed"], "exact", "{c}");
        }
    }
}

#[test]
fn enumeration_and_mon() {
    let dir = tempfile::tempdir().unwrap();
    let r = json_result(&moebius(dir.path(), &["enumerate", "0", "3"]));
    assert_eq!(r["count"], 7);
    let graphs = r["graphs"].as_array().unwrap();
    assert!(graphs.iter().all(|g| g["aut"] == 2));

    // first graph of the inventory, read back through the mon command
    let path = dir.path().join("g.json");
    std::fs::write(&path, graphs[0]["graph"].to_string()).unwrap();
    let edges = graphs[0]["edges"].as_u64().unwrap() as usize;
    let metric = vec!["1"; edges].join(",");
    let r = json_result(&moebius(dir.path(), &["mon", path.to_str().unwrap(), "--metric", &metric]));
    assert_eq!(strings(&r["rho"]), ["1"]);

    let loops = dir.path().join("loops.json");
    std::fs::write(&loops, r#"{"vertices":[[0,1,2,3]],"pairing":[[0,2],[1,3]],"signs":{"0":1}}"#).unwrap();
    let r = json_result(&moebius(dir.path(), &["mon", loops.to_str().unwrap(), "--metric", "1/2,3"]));
    assert_eq!(strings(&r["rho"]), ["0", "1/7", "6/7"]);
}

#[test]
fn csv_quotes_embedded_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = moebius(dir.path(), &["enumerate", "1", "2", "--format", "csv"]);
    let (header, rows) = csv_rows(&out);
    assert_eq!(header.last().unwrap(), "graph");
    assert_eq!(rows.len(), 7);
    for r in rows {
        let g: Value = serde_json::from_str(r.last().unwrap()).unwrap();
        assert!(g["pairing"].is_array());
    }
}

#[test]
fn volumes() {
    let dir = tempfile::tempdir().unwrap();
    let r = json_result(&moebius(dir.path(), &["volume", "0", "4", "1", "2", "3", "4"]));
    assert_eq!(strings(&r["V"]), ["15/2"]);
    let r = json_result(&moebius(dir.path(), &["volume", "2", "1", "2"]));
    assert_eq!(strings(&r["V"]), ["1/24", "1/24", "5/24"]);
}

#[test]
fn purge_is_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["count", "3", "2", "4", "2", "--format", "csv"];
    let first = moebius(dir.path(), &args);
    let listed = json_result(&moebius(dir.path(), &["cache", "list"]));
    assert!(listed["records"].as_u64().unwrap() > 0);
    let warm = moebius(dir.path(), &args);
    json_result(&moebius(dir.path(), &["cache", "purge"]));
    let listed = json_result(&moebius(dir.path(), &["cache", "list"]));
    assert_eq!(listed["records"], 0);
    let cold = moebius(dir.path(), &args);
    let memory = moebius(dir.path(), &[&args[..], &["--no-cache"]].concat());
    assert_eq!(csv_rows(&first).1, csv_rows(&warm).1);
    assert_eq!(first.stdout, cold.stdout);
    assert_eq!(csv_rows(&first).1, csv_rows(&memory).1);
}

#[test]
fn fresh_cache_verifies_clean() {
    let dir = tempfile::tempdir().unwrap();
    let r = json_result(&moebius(dir.path(), &["cache", "verify"]));
    assert!(r["corrupt"].as_array().unwrap().is_empty());
    assert!(r["mismatched"].as_array().unwrap().is_empty());

    json_result(&moebius(dir.path(), &["count", "2", "2", "6", "4", "--method", "sym"]));
    let r = json_result(&moebius(dir.path(), &["cache", "verify", "--fraction", "1"]));
    assert!(r["sampled"].as_u64().unwrap() > 0);
    assert!(r["mismatched"].as_array().unwrap().is_empty());
}

#[test]
fn tampered_record_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    json_result(&moebius(dir.path(), &["count", "4", "2", "6", "4"]));
    let file = dir.path().join("rec-2g2-n2.jsonl");
    let mut bytes = std::fs::read(&file).unwrap();
    let pos = bytes.iter().position(|&c| c == b'/').expect("a rational coefficient");
    bytes[pos - 1] = if bytes[pos - 1] == b'7' { b'8' } else { b'7' };
    std::fs::write(&file, &bytes).unwrap();

    let out = moebius(dir.path(), &["cache", "verify"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_report(&out)["error"], "cross-check");
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let corrupt = doc["result"]["corrupt"].as_array().unwrap();
    assert_eq!(corrupt.len(), 1);
    assert_eq!(corrupt[0]["file"], "rec-2g2-n2.jsonl");
    // the bad line is left in place
    assert_eq!(std::fs::read(&file).unwrap(), bytes);
}

#[test]
fn output_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_moebius"))
            .args(["table", "0", "4", "--no-cache"])
            .env("MOEBIUS_CACHE_DIR", dir.path())
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("4");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn weber_series_agree() {
    let dir = tempfile::tempdir().unwrap();
    let r = json_result(&moebius(dir.path(), &["weber-check", "--max-sum", "10"]));
    let types = r["types"].as_array().unwrap();
    assert_eq!(types.len(), 3);
    assert!(types.iter().all(|t| t["agrees"] == true));
}
