//! End-to-end tests of the command-line surface: exit codes, output
//! formats, determinism, and the verify round trip.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use critvis::io::ResultDocument;

fn critvis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critvis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn solve_settings_chsh_in_degrees() {
    let out = critvis(&["solve-settings", "--alpha", "0,90", "--beta", "45,135", "--degrees"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("critical visibility: 0.707106"), "{text}");
    assert!(text.contains("status: optimal"), "{text}");
    assert!(stderr(&out).is_empty(), "success wrote to stderr");
}

#[test]
fn solve_settings_single_pair() {
    let out = critvis(&["solve-settings", "--alpha", "0", "--beta", "0"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("critical visibility: 1.000000"), "{text}");
    assert!(text.contains("LHV-describable as given"), "{text}");
}

#[test]
fn solve_settings_three_by_three_matches_the_frozen_oracle_value() {
    // Independently computed optimum for alpha {0,60,120}, beta {30,90,150}.
    let expected = 0.769800358919501;
    let out = critvis(&[
        "solve-settings",
        "--alpha",
        "0,60,120",
        "--beta",
        "30,90,150",
        "--degrees",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let doc = ResultDocument::from_json(&stdout(&out)).unwrap();
    assert!(
        (doc.critical_v - expected).abs() <= 1e-7,
        "got {}, expected {expected}",
        doc.critical_v
    );
}

#[test]
fn solve_settings_from_files_and_side_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let a_path = dir.path().join("a.settings");
    let b_path = dir.path().join("b.settings");
    fs::write(&a_path, "angles-deg A\n0\n90\n").unwrap();
    fs::write(&b_path, "angles-deg B\n45\n135\n").unwrap();

    let out = critvis(&[
        "solve-settings",
        "--a-file",
        a_path.to_str().unwrap(),
        "--b-file",
        b_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("0.707106"));

    // Handing the B-side file to --a-file is a parse error.
    let out = critvis(&[
        "solve-settings",
        "--a-file",
        b_path.to_str().unwrap(),
        "--b-file",
        a_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("side"));
}

#[test]
fn solve_data_fixtures_reproduce_the_published_factors() {
    let out = critvis(&["solve-data", "--fixture", "weinfurter-michler"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("0.796"), "{text}");
    assert!(text.contains("cannot be reproduced by any LHV model"), "{text}");

    let out = critvis(&["solve-data", "--fixture", "long-distance", "--format", "json"]);
    assert_eq!(exit_code(&out), 0);
    let doc = ResultDocument::from_json(&stdout(&out)).unwrap();
    assert!((doc.critical_v - 0.7366).abs() <= 0.0005, "{}", doc.critical_v);
}

#[test]
fn solve_data_zero_matrix_is_reported_not_errored() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.txt");
    fs::write(&path, "0 0\n0 0\n").unwrap();
    let out = critvis(&["solve-data", "--input", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("degenerate_zero_matrix"));
}

#[test]
fn parse_errors_exit_two_with_positions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "1.5\n").unwrap();
    let out = critvis(&["solve-data", "--input", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("line 1, column 1"), "{}", stderr(&out));

    let out = critvis(&["solve-data", "--fixture", "no-such-data"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("weinfurter-michler"));

    let out = critvis(&["solve-settings", "--alpha", "0,banana", "--beta", "0"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn usage_errors_exit_two() {
    // clap rejects a missing required side.
    let out = critvis(&["solve-settings", "--alpha", "0,90"]);
    assert_eq!(exit_code(&out), 2);
    let out = critvis(&["solve-data"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn solver_errors_exit_three() {
    // A 12x12 grid exceeds the dense backend's enumeration cap.
    let angles = "0,15,30,45,60,75,90,105,120,135,150,165";
    let out = critvis(&[
        "solve-settings",
        "--alpha",
        angles,
        "--beta",
        angles,
        "--degrees",
        "--backend",
        "dense",
    ]);
    assert_eq!(exit_code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("cap"), "{}", stderr(&out));
}

#[test]
fn backend_flag_selects_registered_backends() {
    for backend in ["dense", "column-generation"] {
        let out = critvis(&[
            "solve-settings",
            "--alpha",
            "0,90",
            "--beta",
            "45,135",
            "--degrees",
            "--backend",
            backend,
        ]);
        assert_eq!(exit_code(&out), 0, "{backend}: {}", stderr(&out));
        assert!(stdout(&out).contains("0.707106"), "{backend}");
    }
    let out = critvis(&["solve-settings", "--alpha", "0", "--beta", "0", "--backend", "simplex9000"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn scan_even_produces_one_record_per_size() {
    let out = critvis(&["scan-even", "--n-range", "2..4", "--format", "json"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 3);
    assert_eq!(report["summary"]["below_conjecture_count"], 0);
}

#[test]
fn scan_random_is_byte_deterministic_per_seed() {
    let args = [
        "scan-random", "--count", "5", "--n", "3", "--m", "3", "--seed", "7", "--format", "json",
    ];
    let first = critvis(&args);
    let second = critvis(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(first.stdout, second.stdout, "same seed must give identical bytes");

    let different = critvis(&[
        "scan-random", "--count", "5", "--n", "3", "--m", "3", "--seed", "8", "--format", "json",
    ]);
    assert_ne!(first.stdout, different.stdout);
}

#[test]
fn scan_random_vectors_run_clean() {
    let out = critvis(&["scan-random", "--count", "3", "--n", "3", "--m", "3", "--vectors"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("below conjecture bound: 0"));
}

#[test]
fn fixtures_are_listed_and_printable() {
    let out = critvis(&["fixtures"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("weinfurter-michler  10x3"), "{text}");
    assert!(text.contains("long-distance  11x2"), "{text}");

    // The printed matrix feeds straight back into solve-data.
    let out = critvis(&["fixtures", "--name", "weinfurter-michler"]);
    assert_eq!(exit_code(&out), 0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wm.txt");
    fs::write(&path, stdout(&out)).unwrap();
    let solved = critvis(&["solve-data", "--input", path.to_str().unwrap()]);
    assert_eq!(exit_code(&solved), 0);
    assert!(stdout(&solved).contains("0.796"));
}

fn solve_to_json(dir: &Path) -> std::path::PathBuf {
    let out = critvis(&[
        "solve-settings",
        "--alpha",
        "0,90",
        "--beta",
        "45,135",
        "--degrees",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let path = dir.join("result.json");
    fs::write(&path, stdout(&out)).unwrap();
    path
}

#[test]
fn verify_accepts_fresh_solver_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve_to_json(dir.path());
    let out = critvis(&["verify", "--result", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("verification passed"));
}

#[test]
fn verify_rejects_a_tampered_probability() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve_to_json(dir.path());
    let mut doc = ResultDocument::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    doc.model.as_mut().unwrap().support[0].probability += 0.1;
    fs::write(&path, doc.to_json()).unwrap();

    let out = critvis(&["verify", "--result", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 5);
    assert!(stderr(&out).contains("model"), "{}", stderr(&out));
}

#[test]
fn verify_rejects_a_tampered_matrix_digest() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve_to_json(dir.path());
    let mut doc = ResultDocument::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    doc.input.entries[0][0] += 0.25;
    fs::write(&path, doc.to_json()).unwrap();

    let out = critvis(&["verify", "--result", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 5);
    assert!(stderr(&out).contains("input_digest"), "{}", stderr(&out));
}

#[test]
fn verify_treats_a_missing_witness_as_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve_to_json(dir.path());
    let mut doc = ResultDocument::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    doc.witness = None;
    fs::write(&path, doc.to_json()).unwrap();

    let out = critvis(&["verify", "--result", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("witness"), "{}", stderr(&out));

    let out = critvis(&["verify", "--result", "/no/such/file.json"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn json_output_passes_verify_for_every_solve_subcommand_input() {
    let dir = tempfile::tempdir().unwrap();
    for (label, args) in [
        ("fixture-1", vec!["solve-data", "--fixture", "weinfurter-michler"]),
        ("fixture-2", vec!["solve-data", "--fixture", "long-distance"]),
        ("colgen", vec![
            "solve-settings", "--alpha", "0,45,90,120", "--beta", "30,60,150",
            "--degrees", "--backend", "column-generation",
        ]),
    ] {
        let mut full = args.clone();
        full.extend(["--format", "json"]);
        let out = critvis(&full);
        assert_eq!(exit_code(&out), 0, "{label}: {}", stderr(&out));
        let path = dir.path().join(format!("{label}.json"));
        fs::write(&path, stdout(&out)).unwrap();
        let verified = critvis(&["verify", "--result", path.to_str().unwrap()]);
        assert_eq!(exit_code(&verified), 0, "{label}: {}", stderr(&verified));
    }
}
