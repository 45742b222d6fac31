use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SCHEMA: &str = "\
CREATE TABLE t1 (a INTEGER, b INTEGER, c TEXT, PRIMARY KEY (a));
CREATE TABLE t2 (d INTEGER, e DECIMAL(10,2), PRIMARY KEY (d));
CREATE TABLE t3 (f INTEGER, PRIMARY KEY (f));
";

fn verity(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verity"))
        .args(args)
        .env("VERITY_CONFIG", dir.join("verity.conf"))
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// t3 has no CSV and starts empty.
fn small() -> TempDir {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("schema.sql"), SCHEMA).unwrap();
    fs::create_dir(p.join("data")).unwrap();
    fs::write(p.join("data/t1.csv"), "a,b,c\n1,10,x\n2,20,\"a, b\"\n3,30,\n").unwrap();
    fs::write(p.join("data/t2.csv"), "d,e\n1234,99.50\n7,5\n").unwrap();
    fs::write(p.join("verity.conf"), "ddl = schema.sql\ncsv_dir = data\npeers = 3\n").unwrap();
    dir
}

fn initialized() -> TempDir {
    let dir = small();
    let o = verity(dir.path(), &["init"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

#[test]
fn init_reports_counts_and_warns_on_missing_csv() {
    let dir = small();
    let o = verity(dir.path(), &["init"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("t1    | 3"), "{out}");
    assert!(out.contains("t3    | 0"), "{out}");
    assert!(out.contains("Total 5"), "{out}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("t3 starts empty"));
    assert!(dir.path().join("verity.ledger").exists());

    let again = verity(dir.path(), &["init"]);
    assert_eq!(code(&again), 1);
}

#[test]
fn corrupt_csv_leaves_no_ledger() {
    let dir = small();
    fs::write(dir.path().join("data/t2.csv"), "d,e\n1234,not a number\n").unwrap();
    let o = verity(dir.path(), &["init"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("t2.csv"));
    assert!(!dir.path().join("verity.ledger").exists());
}

#[test]
fn generated_fixture_bootstraps() {
    let dir = TempDir::new().unwrap();
    let g = verity(dir.path(), &["gen", "--out", ".", "--seed", "7"]);
    assert_eq!(code(&g), 0);
    let o = verity(dir.path(), &["init"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("Total 8595"));
}

#[test]
fn clean_query_exits_zero() {
    let dir = initialized();
    let o = verity(dir.path(), &["exec", "select a, c from t1 where b >= 20"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("a, b"), "{out}");
    assert!(out.contains("(2 rows)"), "{out}");
    assert!(out.contains("-- Verified [S] tables t1: 2 tuple(s) checked"), "{out}");
}

#[test]
fn tampering_exits_two_and_is_logged() {
    let dir = initialized();
    assert_eq!(code(&verity(dir.path(), &["tamper", "t1", "2", "--set", "b=21"])), 0);
    let o = verity(dir.path(), &["exec", "select * from t1 where a = 1; select * from t1"]);
    assert_eq!(code(&o), 2);
    let out = stdout(&o);
    assert!(out.contains("(1 row)"), "first statement still ran: {out}");
    assert!(out.contains("TAMPER DETECTED: 1 tuple(s)"), "{out}");
    let log = fs::read_to_string(dir.path().join("alerts.tsv")).unwrap();
    let fields: Vec<&str> = log.trim_end().split('\t').collect();
    assert_eq!(fields.len(), 5);
    assert_eq!(fields[1], "t1");
}

#[test]
fn errors_exit_one() {
    let dir = initialized();
    let syntax = verity(dir.path(), &["exec", "selec * from t1"]);
    assert_eq!(code(&syntax), 1);
    assert!(String::from_utf8_lossy(&syntax.stderr).contains("syntax error"));
    assert_eq!(code(&verity(dir.path(), &["exec", "select * from nowhere"])), 1);
    assert_eq!(code(&verity(dir.path(), &["exec", "select a from t1 order by a"])), 1);

    let fresh = small();
    let o = verity(fresh.path(), &["exec", "select * from t1"]);
    assert_eq!(code(&o), 1, "no ledger yet");
}

#[test]
fn mutations_persist_between_invocations() {
    let dir = initialized();
    let o = verity(dir.path(), &["exec", "update t1 set b = b + 1 where a <= 2; insert into t3 values (5)"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("update t1: 2 row(s) affected"));

    let o = verity(dir.path(), &["exec", "select b from t1 where a = 2; select * from t3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("21"));
    assert!(stdout(&o).contains("5"));
    assert_eq!(code(&verity(dir.path(), &["audit", "full"])), 0);
    let v = verity(dir.path(), &["ledger", "verify"]);
    assert_eq!(stdout(&v).trim(), "chain ok, head height 5");
}

#[test]
fn out_of_band_delete_and_insert_show_in_audits() {
    let dir = initialized();
    assert_eq!(code(&verity(dir.path(), &["audit", "counts"])), 0);
    assert_eq!(code(&verity(dir.path(), &["tamper", "t2", "7", "--delete"])), 0);
    assert_eq!(code(&verity(dir.path(), &["tamper", "t2", "--insert", "999999,1.00"])), 0);

    // same count, so only the full audit notices
    let counts = verity(dir.path(), &["audit", "counts"]);
    assert_eq!(code(&counts), 0, "{}", stdout(&counts));
    let full = verity(dir.path(), &["audit", "full"]);
    assert_eq!(code(&full), 2);
    let out = stdout(&full);
    assert!(out.contains("expected ABSENT"), "{out}");
    assert!(out.contains("MISSING t2"), "{out}");

    let q = verity(dir.path(), &["exec", "select * from t2 where d > 1000"]);
    assert_eq!(code(&q), 2);
    assert!(stdout(&q).contains("TAMPER DETECTED"));
}

#[test]
fn ledger_inspection() {
    let dir = initialized();
    let o = verity(dir.path(), &["exec", "delete from t2 where d = 7"]);
    assert_eq!(code(&o), 0);
    let block = verity(dir.path(), &["--format", "json-lines", "ledger", "block", "4"]);
    assert_eq!(code(&block), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&block).trim()).unwrap();
    let ops: Vec<&str> = v["block"]["txs"].as_array().unwrap().iter().map(|t| t["op"].as_str().unwrap()).collect();
    assert_eq!(ops, ["delete", "adjust_count"]);
    let rid = v["block"]["txs"][0]["row_id"].as_str().unwrap().to_string();

    let h = verity(dir.path(), &["ledger", "history", &rid]);
    assert_eq!(code(&h), 0);
    let out = stdout(&h);
    assert!(out.contains("in t2: deleted, version 2"), "{out}");
    assert!(out.contains("put"), "{out}");
    assert_eq!(code(&verity(dir.path(), &["ledger", "history", "abc"])), 1);
    assert_eq!(code(&verity(dir.path(), &["ledger", "block", "99"])), 1);
}

#[test]
fn json_lines_output_parses() {
    let dir = initialized();
    let o = verity(dir.path(), &["--format", "json-lines", "exec", "select a, c, e from t1, t2 where a = 1"]);
    assert_eq!(code(&o), 0);
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[..2].iter().all(|l| l["a"] == 1 && l["c"] == "x"));
    let mut es: Vec<&str> = lines[..2].iter().map(|l| l["e"].as_str().unwrap()).collect();
    es.sort();
    assert_eq!(es, ["5", "99.5"]);
    assert_eq!(lines[2]["report"]["outcome"], "Verified");
    assert_eq!(lines[2]["report"]["tuples_checked"], 3);
}

#[test]
fn config_comes_from_flag_or_env() {
    let dir = initialized();
    let moved = dir.path().join("elsewhere.conf");
    fs::rename(dir.path().join("verity.conf"), &moved).unwrap();
    assert_eq!(code(&verity(dir.path(), &["exec", "select * from t1"])), 1);
    let flag = verity(dir.path(), &["--config", moved.to_str().unwrap(), "exec", "select * from t1"]);
    assert_eq!(code(&flag), 0);
    fs::write(dir.path().join("verity.conf"), "quorum = 2\n").unwrap();
    assert_eq!(code(&verity(dir.path(), &["exec", "select * from t1"])), 1);
}

#[test]
fn repl_runs_statements_and_meta_commands() {
    let dir = initialized();
    let mut child = Command::new(env!("CARGO_BIN_EXE_verity"))
        .arg("repl")
        .env("VERITY_CONFIG", dir.path().join("verity.conf"))
        .current_dir(dir.path())
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let script = ".tables\nselect count(*)\n  from t1;\nselec;\n.schema t2\n.audit counts\n.nope\n.quit\nselect * from t1;\n";
    std::io::Write::write_all(child.stdin.as_mut().unwrap(), script.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("t3    | 0"), "{out}");
    assert!(out.contains("(1 row)"), "{out}");
    assert!(out.contains("error: "), "{out}");
    assert!(out.contains("CREATE TABLE t2"), "{out}");
    assert!(out.contains("row counts match"), "{out}");
    assert!(out.contains("unknown command"), "{out}");
    assert_eq!(out.matches("-- Verified").count(), 1, "nothing runs after .quit: {out}");
}

#[test]
fn bench_leaves_the_session_untouched() {
    let dir = initialized();
    fs::write(
        dir.path().join("q.sql"),
        "-- all\nselect * from t1;\n-- add\ninsert into t3 values (1);\n-- none\nselect * from t3 where f > 9;\n",
    )
    .unwrap();
    let o = verity(dir.path(), &["bench", "q.sql", "--runs", "2", "--out", "b.jsonl"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs: Vec<serde_json::Value> = fs::read_to_string(dir.path().join("b.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[0]["tuples_checked"], 3);
    assert_eq!(recs[1]["kind"], "I");
    assert!(recs[0]["per_tuple"].as_f64().unwrap() > 0.0);
    assert_eq!(recs[2]["tuples_checked"], 0);
    assert!(recs[2]["per_tuple"].is_null());
    assert!(stdout(&o).contains("fit over 2 queries"), "{}", stdout(&o));

    let after = verity(dir.path(), &["exec", "select * from t3"]);
    assert!(stdout(&after).contains("(0 rows)"));
    assert_eq!(stdout(&verity(dir.path(), &["ledger", "verify"])).trim(), "chain ok, head height 3");
}
