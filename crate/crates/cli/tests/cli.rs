use std::process::{Command, Output};

use permlimit::{Pattern, Permutation};
use serde_json::Value;

fn permlimit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permlimit"))
        .args(args)
        .env_remove("PERMLIMIT_SEED")
        .env_remove("PERMLIMIT_JOBS")
        .output()
        .expect("run permlimit")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn sample_lines_are_avoiders() {
    let out = permlimit(&["sample", "--pattern", "312", "--n", "5", "--trials", "3", "--seed", "7"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        let p: Permutation = line.parse().unwrap();
        assert_eq!(p.len(), 5);
        assert!(p.avoids(Pattern::P312));
    }
    assert_eq!(permlimit(&["sample", "--pattern", "312", "--n", "5", "--trials", "3", "--seed", "7"]).stdout, out.stdout);
}

#[test]
fn sample_empty_permutation() {
    let out = permlimit(&["sample", "--pattern", "321", "--n", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "\n");
}

#[test]
fn sample_birr_only_needs_321() {
    let out = permlimit(&["sample", "--pattern", "312", "--n", "4", "--birr-only"]);
    assert_eq!(out.status.code(), Some(2));
    let out = permlimit(&["sample", "--pattern", "321", "--n", "6", "--trials", "20", "--birr-only"]);
    for line in stdout(&out).lines() {
        let p: Permutation = line.parse().unwrap();
        assert!(p.is_block_irreducible().unwrap());
    }
}

#[test]
fn seed_from_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_permlimit"));
        cmd.args(["sample", "--pattern", "231", "--n", "12", "--trials", "4"]);
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        match env {
            Some(s) => cmd.env("PERMLIMIT_SEED", s),
            None => cmd.env_remove("PERMLIMIT_SEED"),
        };
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("99"), None), run(None, Some("99")));
    assert_ne!(run(Some("99"), None), run(None, Some("98")));
}

#[test]
fn enumerate_examples() {
    let out = permlimit(&["enumerate", "--pattern", "213", "--n", "3"]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 6);
    assert!(text.ends_with("count=5\n"));
    assert!(!text.contains("2,1,3\n"));

    let text = stdout(&permlimit(&["enumerate", "--pattern", "321", "--n", "4", "--birr-only"]));
    assert_eq!(text.lines().count(), 6);
    assert!(text.ends_with("count=5\n"));

    assert_eq!(stdout(&permlimit(&["enumerate", "--pattern", "132", "--n", "1"])), "1\ncount=1\n");
}

#[test]
fn enumerate_bound_is_a_usage_error() {
    let out = permlimit(&["enumerate", "--pattern", "123", "--n", "11"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bound"));
    let out = permlimit(&["enumerate", "--pattern", "123", "--n", "11", "--bound", "11", "--format", "json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["count"], 58786);
}

#[test]
fn limit_231_with_empty_first_block_starts_with_inf() {
    let seed = (0..200u64)
        .find(|s| {
            let mut rng = permlimit::RngStream::new(*s, 0);
            permlimit::sample_x(&mut rng) == 0
        })
        .unwrap()
        .to_string();
    let out = permlimit(&["limit", "--pattern", "231", "--prefix-len", "1", "--seed", &seed]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "inf\n");
}

#[test]
fn degenerate_limits_are_rejected() {
    for pattern in ["123", "132"] {
        let out = permlimit(&["limit", "--pattern", pattern, "--prefix-len", "3"]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate limit"));
    }
    let out = permlimit(&["limit", "--pattern", "312"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trace_replays_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    for pattern in ["312", "231", "213", "321-partial"] {
        let path = dir.path().join(format!("{pattern}.json"));
        let path = path.to_str().unwrap();
        let out = permlimit(&["limit", "--pattern", pattern, "--prefix-len", "40", "--seed", "3", "--trace", path]);
        assert!(out.status.success());
        let replayed = permlimit(&["limit", "--replay", path]);
        assert!(replayed.status.success(), "{}", String::from_utf8_lossy(&replayed.stderr));
        assert_eq!(replayed.stdout, out.stdout);
    }
    let path = dir.path().join("312.json");
    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    file["trace"]["seed"] = Value::from(4);
    std::fs::write(&path, file.to_string()).unwrap();
    let out = permlimit(&["limit", "--replay", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_counts_passes() {
    let out = permlimit(&["verify", "counts", "--max-n", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["meta"]["seed"], 0);
    assert!(report["meta"]["rng"].as_str().unwrap().contains("ChaCha8"));
    assert_eq!(report["meta"]["config"]["max_n"], 8);
}

#[test]
fn verify_positional_exact() {
    let out = permlimit(&["verify", "positional", "--pattern", "312", "--n", "8", "--exact", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# passed=true"));
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["j", "observed", "expected", "abs_error"]);
    for rec in reader.records() {
        assert_eq!(&rec.unwrap()[3], "0.0");
    }
}

#[test]
fn verify_failure_exits_one() {
    // an impossible tolerance must fail with exit code 1
    let out = permlimit(&["verify", "stable", "--n", "50", "--trials", "50", "--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["thresholds"]["tolerance"], 0.0);
}

#[test]
fn verify_usage_errors_exit_two() {
    for args in [
        vec!["verify", "counts", "--format", "lines"],
        vec!["verify", "positional", "--pattern", "321", "--n", "5", "--exact"],
        vec!["verify", "positional", "--pattern", "312", "--n", "12", "--exact"],
        vec!["verify", "escape", "--pattern", "312"],
        vec!["verify", "convergence", "--pattern", "132"],
        vec!["verify", "bogus"],
        vec!["sample", "--pattern", "312", "--n", "3", "--jobs", "0"],
    ] {
        let out = permlimit(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn verify_stable_t_zero() {
    let out = permlimit(&["verify", "stable", "--n", "100", "--trials", "100", "--t", "0,1", "--tolerance", "1"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &report["table"]["rows"][0];
    assert_eq!(row[1], 1.0);
    assert_eq!(row[3], 1.0);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.txt");
    let out = permlimit(&["enumerate", "--pattern", "231", "--n", "2", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(path).unwrap(), "1,2\n2,1\ncount=2\n");
}

#[test]
fn partial_321_line_ends_with_tail_marker() {
    let mut saw_empty = false;
    for seed in 0..20 {
        let out = permlimit(&["limit", "--pattern", "321-partial", "--seed", &seed.to_string()]);
        assert!(out.status.success());
        let text = stdout(&out);
        let line = text.trim_end();
        assert!(line == "Z" || line.ends_with(",Z"), "{line}");
        saw_empty |= line == "Z";
    }
    assert!(saw_empty);
}
