//! Golden-file regression tests for the command-line interface.
//!
//! Every subcommand is run against committed fixture inputs and its full
//! stdout is compared byte-for-byte with a committed snapshot.  Each command
//! is then re-run — twice per worker count, for 1 and 4 workers — and every
//! run must reproduce the snapshot exactly.  Set `UPDATE_GOLDEN=1` to
//! regenerate the snapshots after an intentional output change.

use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn run_with_workers(args: &[&str], workers: &str) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_weylkit"))
        .args(args)
        .env("WEYLKIT_THREADS", workers)
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn check_golden(name: &str, args: &[&str]) {
    let (first, code) = run_with_workers(args, "1");
    assert_eq!(
        code,
        0,
        "{name}: unexpected exit code\nstdout: {}",
        String::from_utf8_lossy(&first)
    );
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &first).expect("write golden file");
    }
    let want = std::fs::read(&path)
        .unwrap_or_else(|_| panic!("missing golden file {} (run with UPDATE_GOLDEN=1)", path.display()));
    assert_eq!(
        first,
        want,
        "{name}: output drifted from the snapshot\ngot: {}",
        String::from_utf8_lossy(&first)
    );
    for workers in ["1", "4"] {
        for run in 0..2 {
            let (again, code) = run_with_workers(args, workers);
            assert_eq!(code, 0, "{name}: exit code on run {run} with {workers} workers");
            assert_eq!(
                again, want,
                "{name}: output not byte-stable on run {run} with {workers} workers"
            );
        }
    }
}

#[test]
fn roots_golden() {
    check_golden(
        "roots.json",
        &["roots", "--datum", &fixture("a2_sc.json"), "--bound", "3"],
    );
}

#[test]
fn length_golden() {
    check_golden(
        "length.json",
        &["length", "--datum", &fixture("a2_sc.json"), "--w", "t[2,-1]*s1"],
    );
}

#[test]
fn demazure_golden() {
    check_golden(
        "demazure.json",
        &[
            "demazure",
            "--datum",
            &fixture("a1_sc.json"),
            "--u",
            "s0*s1",
            "--v",
            "s1*s0",
        ],
    );
}

#[test]
fn regular_golden() {
    check_golden(
        "regular.json",
        &[
            "regular",
            "--datum",
            &fixture("a2_sc.json"),
            "--w",
            "t[2,-1]*s1",
            "--m",
            "1",
        ],
    );
}

#[test]
fn torsion_golden() {
    check_golden(
        "torsion.json",
        &[
            "torsion",
            "--datum",
            &fixture("a2_sc.json"),
            "--sigma",
            &fixture("a2_flip.json"),
            "--w",
            "t[1,1]*s1",
        ],
    );
}

#[test]
fn classify_embeddings_golden() {
    check_golden(
        "classify_embeddings.json",
        &[
            "classify-embeddings",
            "--datum",
            &fixture("a1_sc.json"),
            "--wbar",
            "s1",
        ],
    );
}

#[test]
fn coinvariants_golden() {
    check_golden("coinvariants.json", &["coinvariants", "--matrix", "[[-1]]"]);
}

#[test]
fn trace_formula_golden() {
    check_golden(
        "trace_formula.json",
        &["trace-formula", "--fixture", &fixture("rot4_mixed.json")],
    );
}

#[test]
fn packet_golden() {
    check_golden(
        "packet.json",
        &[
            "packet",
            "--datum",
            &fixture("a1_sc.json"),
            "--wbar",
            "s1",
            "--fixture",
            &fixture("a1_sign_module.json"),
        ],
    );
}

#[test]
fn selftest_golden() {
    check_golden("selftest.json", &["selftest"]);
}

#[test]
fn invalid_input_exits_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_weylkit"))
        .args(["length", "--datum", &fixture("a2_sc.json"), "--w", "s9"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(1), "bad input must exit 1");
    assert!(out.stdout.is_empty(), "no report on bad input");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error"), "stderr carries the error: {err}");
}

#[test]
fn missing_file_exits_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_weylkit"))
        .args(["roots", "--datum", "/nonexistent/datum.json"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(1), "missing file must exit 1");
    assert!(out.stdout.is_empty());
}
