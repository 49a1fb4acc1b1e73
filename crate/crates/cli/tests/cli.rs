// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use unikrypt_cli::report::{parse_csv, CSV_HEADER};
use unikrypt_cli::SEED_ENV;

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn unikrypt(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_unikrypt"));
    cmd.args(args).env_remove(SEED_ENV);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn conf(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bench_writes_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let o = unikrypt(
        &["bench", "--config", &conf("default.conf"), "--op", "all", "--iterations", "20", "--csv", csv.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("# unikrypt bench: op=all iterations=20\n"));
    assert!(out.contains("observed resolution"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let rows = parse_csv(&text).unwrap();
    // two phases per symmetric op and four for ECDSA, on software, se:1 and se:2
    assert_eq!(rows.len(), 3 * (2 + 2 + 4));
    for r in &rows {
        assert_eq!(r.iterations, 20);
        assert_eq!(r.overhead_ns, r.total_ns - r.internal_ns);
    }
}

#[test]
fn zero_iterations_is_rejected() {
    let o = unikrypt(&["bench", "--config", &conf("default.conf"), "--iterations", "0"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("INVALID_ARGUMENT"));
}

#[test]
fn failed_check_exits_one() {
    let o = unikrypt(&["bench", "--config", &conf("cipher-single-slot.conf"), "--iterations", "5"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let words = |l: &str| l.split_whitespace().collect::<Vec<_>>().join(" ");
    let lines: Vec<String> = out.lines().map(words).collect();
    assert!(lines.iter().any(|l| l == "hmac - NOT_SUPPORTED"), "{out}");
    assert!(lines.iter().any(|l| l == "check single_slot ok second import: INSUFFICIENT_STORAGE"), "{out}");

    let o = unikrypt(
        &["bench", "--config", &conf("cipher-single-slot.conf"), "--op", "cipher", "--iterations", "5"],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn seed_variable_is_validated() {
    let args = ["bench", "--config", &conf("one-se.conf"), "--op", "hmac", "--iterations", "3"];
    let seed = "ff".repeat(32);
    assert_eq!(unikrypt(&args, &[(SEED_ENV, &seed)]).status.code(), Some(0));
    let o = unikrypt(&args, &[(SEED_ENV, "abc")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(SEED_ENV));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "[slots]\nsingle_count = many\n").unwrap();
    let o = unikrypt(&["bench", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let missing = dir.path().join("absent.conf");
    assert_eq!(unikrypt(&["selftest", "--config", missing.to_str().unwrap()], &[]).status.code(), Some(2));

    let aes256 = dir.path().join("aes256.conf");
    std::fs::write(&aes256, "[application]\nCIPHER_CBC_AES_256_ENCRYPT = true\n").unwrap();
    let o = unikrypt(&["selftest", "--config", aes256.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("NOT_SUPPORTED"));
    let o = unikrypt(&["bench", "--config", aes256.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NOT_SUPPORTED"));
}

#[test]
fn selftest_passes_on_shipped_configs() {
    for name in ["default.conf", "accelerated.conf", "cipher-single-slot.conf", "one-se.conf", "two-se.conf"] {
        let o = unikrypt(&["selftest", "--config", &conf(name)], &[]);
        let out = stdout(&o);
        assert_eq!(o.status.code(), Some(0), "{name}: {out}");
        assert!(out.trim_end().ends_with("failed: PASS"), "{name}: {out}");
    }
}
