//! End-to-end tests of the `mfd` binary: exit codes, report structure,
//! determinism, and the gen → diag → verify round trip.

use std::path::Path;
use std::process::{Command, Output};

fn mfd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfd"))
        .current_dir(dir)
        .env_remove("MFD_THREADS")
        .args(args)
        .output()
        .expect("spawn mfd")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// The machine-readable payload of a written report file.
fn machine_section(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).expect("report file");
    let marker = "--- mfd/1 ---\n";
    let at = text.find(marker).expect("machine section marker");
    let doc: serde_json::Value =
        serde_json::from_str(&text[at + marker.len()..]).expect("machine section json");
    assert_eq!(doc["format"], "mfd/1");
    assert_eq!(doc["kind"], "run");
    doc["payload"].clone()
}

#[test]
fn generated_interval_random_diagonalizes_within_eps() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfd(
        dir.path(),
        &["gen", "--kind", "interval-random", "--m", "128", "--n", "4", "--seed", "7", "--out", "f.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = mfd(
        dir.path(),
        &["diag", "--field", "f.json", "--eps", "0.05", "--report", "r.txt"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let payload = machine_section(&dir.path().join("r.txt"));
    assert_eq!(payload["outcome"], "success");
    let max = payload["residual"]["max"].as_f64().unwrap();
    assert!(max <= 0.05, "residual {max}");
    // The full configuration is echoed for reproducibility.
    assert_eq!(payload["config"]["eps"].as_f64(), Some(0.05));
    assert_eq!(payload["config"]["seed"].as_u64(), Some(7));
    assert_eq!(payload["config"]["dict_degree"].as_u64(), Some(2));
}

#[test]
fn braid_is_certified_obstructed_with_winding_companion() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfd(
        dir.path(),
        &["gen", "--kind", "braid", "--m", "256", "--out", "braid.json"],
    );
    assert_eq!(code(&out), 0);
    let out = mfd(
        dir.path(),
        &["diag", "--field", "braid.json", "--report", "r.txt"],
    );
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stdout));
    let payload = machine_section(&dir.path().join("r.txt"));
    assert_eq!(payload["outcome"], "obstructed");
    let certs = payload["certificates"].as_array().unwrap();
    let monodromy = certs
        .iter()
        .find(|c| c["kind"] == "monodromy")
        .expect("monodromy certificate");
    assert_eq!(monodromy["value"]["permutation"], serde_json::json!([1, 0]));
    assert_eq!(monodromy["tension_flag"], true);
    let winding = certs
        .iter()
        .find(|c| c["kind"] == "det_winding")
        .expect("winding certificate");
    assert_eq!(winding["value"]["integer"].as_i64(), Some(1));
}

#[test]
fn truncated_input_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfd(
        dir.path(),
        &["gen", "--kind", "crossing", "--m", "16", "--out", "f.json"],
    );
    assert_eq!(code(&out), 0);
    let full = std::fs::read_to_string(dir.path().join("f.json")).unwrap();
    std::fs::write(dir.path().join("cut.json"), &full[..full.len() / 2]).unwrap();
    let out = mfd(dir.path(), &["diag", "--field", "cut.json"]);
    assert_eq!(code(&out), 4);
    let out = mfd(dir.path(), &["verify", "--field", "f.json", "--frames", "cut.json"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn verify_reproduces_the_diag_residual() {
    let dir = tempfile::tempdir().unwrap();
    mfd(dir.path(), &["gen", "--kind", "crossing", "--m", "128", "--out", "f.json"]);
    let out = mfd(
        dir.path(),
        &[
            "diag", "--field", "f.json", "--eps", "0.06", "--eta", "0.05",
            "--frames-out", "frames.json", "--report", "diag.txt",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let out = mfd(
        dir.path(),
        &[
            "verify", "--field", "f.json", "--frames", "frames.json",
            "--eps", "0.06", "--report", "verify.txt",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let diag_max = machine_section(&dir.path().join("diag.txt"))["residual"]["max"]
        .as_f64()
        .unwrap();
    let verify_max = machine_section(&dir.path().join("verify.txt"))["residual"]["max"]
        .as_f64()
        .unwrap();
    assert!(
        (diag_max - verify_max).abs() <= 1e-12,
        "diag measured {diag_max}, verify measured {verify_max}"
    );
}

#[test]
fn reports_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    mfd(dir.path(), &["gen", "--kind", "sphere-random", "--k", "1", "--n", "3", "--out", "f.json"]);
    let run = |threads: &str, report: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_mfd"))
            .current_dir(dir.path())
            .env("MFD_THREADS", threads)
            .args([
                "diag", "--field", "f.json", "--eps", "5.0", "--eta", "0.45",
                "--report", report,
            ])
            .output()
            .expect("spawn mfd");
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    };
    run("1", "one.txt");
    run("3", "three.txt");
    let one = std::fs::read(dir.path().join("one.txt")).unwrap();
    let three = std::fs::read(dir.path().join("three.txt")).unwrap();
    assert_eq!(one, three, "thread count leaked into the report bytes");
}

#[test]
fn bad_thread_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mfd"))
        .current_dir(dir.path())
        .env("MFD_THREADS", "zero")
        .args(["gen", "--kind", "crossing", "--m", "8", "--out", "f.json"])
        .output()
        .expect("spawn mfd");
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unknown_example_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = mfd(dir.path(), &["gen", "--kind", "perpetuum-mobile", "--out", "f.json"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("unknown example"));
}

#[test]
fn monopole_obstruction_comes_with_band_sum_zero() {
    let dir = tempfile::tempdir().unwrap();
    mfd(dir.path(), &["gen", "--kind", "monopole", "--k", "1", "--out", "f.json"]);
    let out = mfd(dir.path(), &["obstruct", "--field", "f.json", "--report", "r.txt"]);
    assert_eq!(code(&out), 2);
    let payload = machine_section(&dir.path().join("r.txt"));
    let certs = payload["certificates"].as_array().unwrap();
    let cherns: Vec<i64> = certs
        .iter()
        .filter(|c| c["kind"] == "chern")
        .map(|c| c["value"]["integer"].as_i64().unwrap())
        .collect();
    assert_eq!(cherns.len(), 2);
    assert_eq!(cherns[0], -1, "lower band");
    assert_eq!(cherns.iter().sum::<i64>(), 0, "band sum");
}
