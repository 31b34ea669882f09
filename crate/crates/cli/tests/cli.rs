use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const EXAMPLE: &str = "c worked example\np cnf 7 5\n1 3 5 -7 0\n4 6 0\n-2 4 0\n-1 -2 5 0\n-1 2 -5 0\n";

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("anycount-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, file: &str, text: &str) -> PathBuf {
    let p = dir.join(file);
    std::fs::write(&p, text).unwrap();
    p
}

fn anycount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anycount")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

/// Random 3-CNF that does not converge in a handful of calls.
fn hard_instance() -> String {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = |m: u64| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state % m
    };
    let (n, m) = (40, 120);
    let mut s = format!("p cnf {n} {m}\n");
    for _ in 0..m {
        let mut vars: Vec<u64> = Vec::new();
        while vars.len() < 3 {
            let v = next(n) + 1;
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        for v in vars {
            let sign = if next(2) == 0 { "-" } else { "" };
            s.push_str(&format!("{sign}{v} "));
        }
        s.push_str("0\n");
    }
    s
}

#[test]
fn unsat_exits_with_reserved_code() {
    let dir = scratch_dir("unsat");
    let f = write(&dir, "unsat.cnf", "p cnf 2 3\n1 0\n-1 2 0\n-2 0\n");
    let out = anycount(&[f.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(10));
    let v = json(&out);
    assert_eq!(v["estimate"], "0");
    assert_eq!(v["converged"], true);
}

#[test]
fn example_converges_to_enumerated_count() {
    let dir = scratch_dir("example");
    let f = write(&dir, "example.cnf", EXAMPLE);
    let out = anycount(&[f.to_str().unwrap(), "--timeout", "10", "--seed", "0", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["converged"], true);
    assert_eq!(v["estimate"], "55");
    assert_eq!(v["lower_bound"], "55");
    assert!((v["estimate_log2"].as_f64().unwrap() - 55f64.log2()).abs() < 1e-9);
    for key in ["n_calls", "n_restarts", "elapsed_s", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn bounds_mode_reports_ordered_bounds() {
    let dir = scratch_dir("bounds");
    let f = write(&dir, "hard.cnf", &hard_instance());
    let out = anycount(&[f.to_str().unwrap(), "--mode", "bounds", "--max-calls", "5", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["converged"], false);
    let lo = anycount::Count::parse(v["lower"].as_str().unwrap()).unwrap();
    let hi = anycount::Count::parse(v["upper"].as_str().unwrap()).unwrap();
    assert!(lo <= hi);
}

#[test]
fn exact_mode_counts_example() {
    let dir = scratch_dir("exact");
    let f = write(&dir, "example.cnf", EXAMPLE);
    let v = json(&anycount(&[f.to_str().unwrap(), "--mode", "exact-easy", "--json"]));
    assert_eq!(v["estimate"], "55");
    assert_eq!(v["converged"], true);
}

#[test]
fn same_arguments_give_identical_json() {
    let dir = scratch_dir("determinism");
    let f = write(&dir, "hard.cnf", &hard_instance());
    let run = |trace: &str| {
        let t = dir.join(trace);
        let out = anycount(&[
            f.to_str().unwrap(),
            "--seed",
            "7",
            "--max-calls",
            "20",
            "--json",
            "--trace",
            t.to_str().unwrap(),
        ]);
        let mut v = json(&out);
        v.as_object_mut().unwrap().remove("elapsed_s");
        let estimates: Vec<String> = csv::Reader::from_path(&t)
            .unwrap()
            .records()
            .map(|r| r.unwrap()[2].to_string())
            .collect();
        (serde_json::to_string(&v).unwrap(), estimates)
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn trace_csv_round_trips_and_is_monotone() {
    let dir = scratch_dir("trace");
    let f = write(&dir, "hard.cnf", &hard_instance());
    let t = dir.join("trace.csv");
    let out = anycount(&[f.to_str().unwrap(), "--max-calls", "30", "--trace", t.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&t).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["elapsed_s", "n_calls", "estimate", "lower", "upper", "converged"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 30);
    let mut prev = (0.0f64, 0u64);
    for r in &rows {
        let elapsed: f64 = r[0].parse().unwrap();
        let calls: u64 = r[1].parse().unwrap();
        let est = anycount::Count::parse(&r[2]).unwrap();
        let lo = anycount::Count::parse(&r[3]).unwrap();
        let hi = anycount::Count::parse(&r[4]).unwrap();
        assert!(r[5] == *"true" || r[5] == *"false");
        assert!(elapsed >= prev.0 && calls > prev.1);
        assert!(lo <= hi && !est.is_zero());
        prev = (elapsed, calls);
    }
    // rewrite and reread
    let copy = dir.join("copy.csv");
    let mut w = csv::Writer::from_path(&copy).unwrap();
    w.write_record(rdr.headers().unwrap()).unwrap();
    for r in &rows {
        w.write_record(r).unwrap();
    }
    w.flush().unwrap();
    assert_eq!(std::fs::read_to_string(&t).unwrap(), std::fs::read_to_string(&copy).unwrap());
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let dir = scratch_dir("errors");
    let bad = write(&dir, "bad.cnf", "p cnf 2 1\n1 x 0\n");
    assert_eq!(anycount(&[bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(anycount(&[dir.join("missing.cnf").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(anycount(&[]).status.code(), Some(2));
    let ok = write(&dir, "ok.cnf", EXAMPLE);
    assert_eq!(anycount(&[ok.to_str().unwrap(), "--delta", "1.5"]).status.code(), Some(2));
    assert_eq!(anycount(&[ok.to_str().unwrap(), "--mode", "fast"]).status.code(), Some(2));
}
