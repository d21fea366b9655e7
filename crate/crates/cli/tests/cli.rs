//! End-to-end runs of the binary: flag handling, exit codes, output
//! formats, and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn plate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("plate-cli-test-{}-{name}", std::process::id()));
    p
}

fn write_disk_spec(resolution: usize) -> PathBuf {
    let path = tmp(&format!("disk{resolution}.json"));
    std::fs::write(
        &path,
        format!(r#"{{"shape": "disk", "params": [1.0], "resolution": {resolution}}}"#),
    )
    .unwrap();
    path
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = plate(&[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("usage:"), "stderr: {err}");
}

#[test]
fn unknown_command_is_a_usage_error() {
    let out = plate(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_domain_file_reports_parse_error() {
    let path = tmp("bad.json");
    std::fs::write(&path, "{not json").unwrap();
    let out = plate(&["solve", "--domain", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "machine-readable line: {err}");
}

#[test]
fn resolution_below_32_is_rejected() {
    let path = tmp("lowres.json");
    std::fs::write(&path, r#"{"shape": "disk", "params": [1.0], "resolution": 16}"#).unwrap();
    let out = plate(&["solve", "--domain", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ball_table_reproduces_the_reference_row() {
    let out = plate(&["ball-table", "--dims", "4..9", "--volume", "1"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d,int_uB,int_uB_squared"));
    let row5 = text.lines().find(|l| l.starts_with("5,")).expect("d=5 row");
    let cols: Vec<f64> = row5
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((cols[0] - 0.5643).abs() < 5e-4, "d=5 mean {}", cols[0]);
    assert!((cols[1] - 0.3185).abs() < 1e-3, "d=5 square {}", cols[1]);
}

#[test]
fn ball_table_is_byte_deterministic() {
    let a = plate(&["ball-table", "--dims", "2..9"]);
    let b = plate(&["ball-table", "--dims", "2..9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn ball_profile_emits_two_blocks_ending_at_zero() {
    let out = plate(&["ball-profile", "--d", "3", "--samples", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
    assert_eq!(blocks.len(), 2, "profile has a u block and a laplacian block");
    let last_u = blocks[0].lines().last().unwrap();
    let u_at_r: f64 = last_u.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(u_at_r.abs() < 1e-10, "u(R) = {u_at_r}");
    assert_eq!(blocks[0].lines().count(), 41);
}

#[test]
fn ball_dimension_range_is_validated() {
    let out = plate(&["ball-profile", "--d", "13"]);
    assert_eq!(out.status.code(), Some(2));
    let out = plate(&["ball-table", "--dims", "1..5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_disk_matches_the_closed_form_within_three_percent() {
    let spec = write_disk_spec(128);
    let pair_path = tmp("pair128.csv");
    let out = plate(&[
        "solve",
        "--domain",
        spec.to_str().unwrap(),
        "--out",
        pair_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&pair_path).unwrap();
    let ev_line = text.lines().find(|l| l.starts_with("# eigenvalue")).unwrap();
    let gamma: f64 = ev_line.split_whitespace().last().unwrap().parse().unwrap();
    let exact = 104.3631;
    assert!(
        (gamma - exact).abs() < 0.03 * exact,
        "Gamma {gamma} vs {exact}"
    );
    assert!(text.lines().any(|l| l == "index,x,y,value"));
}

#[test]
fn rearrange_and_talenti_consume_solver_output() {
    let spec = write_disk_spec(64);
    let pair_path = tmp("pair64.csv");
    let out = plate(&[
        "solve",
        "--domain",
        spec.to_str().unwrap(),
        "--out",
        pair_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let profile_path = tmp("profile.csv");
    let out = plate(&[
        "rearrange",
        "--field",
        pair_path.to_str().unwrap(),
        "--mode",
        "schwarz",
        "--out",
        profile_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&profile_path).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]), "schwarz profile nonincreasing");

    // The eigenmode is a nonnegative source on the disk, so the
    // symmetrized comparison applies to it directly.
    let out = plate(&[
        "talenti",
        "--domain",
        spec.to_str().unwrap(),
        "--f",
        pair_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("comparison PASS"), "stdout: {text}");
}

#[test]
fn shape_deriv_dilation_reports_the_scaling_law() {
    let spec = write_disk_spec(64);
    let out = plate(&["shape-deriv", "--domain", spec.to_str().unwrap(), "--field", "dilation"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let grab = |key: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("missing {key} in {text}"))
            .split_whitespace()
            .last()
            .unwrap()
            .parse()
            .unwrap()
    };
    let gamma = grab("eigenvalue");
    let fd = grab("eigen_derivative_fd");
    assert!((fd + 4.0 * gamma).abs() < 1e-3 * gamma, "fd {fd} vs -4 Gamma");
    let vol_exact = grab("volume_derivative_exact");
    assert!((vol_exact - 2.0 * std::f64::consts::PI).abs() < 0.1);
}

#[test]
fn check_all_passes_on_the_disk() {
    let spec = write_disk_spec(64);
    let out = plate(&["check-all", "--domain", spec.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "report:\n{text}");
    assert!(text.contains("overall: PASS"));
    // Auditable thresholds appear in the report lines.
    assert!(text.contains("(tol "));
}

#[test]
fn print_config_lists_defaults() {
    let out = plate(&["--print-config"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("tol: 1e-10"));
    assert!(text.contains("volume: 1"));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let cfg_path = tmp("cfg.json");
    std::fs::write(&cfg_path, r#"{"volume": 2.0, "samples": 7}"#).unwrap();
    let out = plate(&["--config", cfg_path.to_str().unwrap(), "--print-config"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("volume: 2"), "{text}");
    assert!(text.contains("samples: 7"));
    let out = plate(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "--volume",
        "3.5",
        "--print-config",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("volume: 3.5"), "flags override the file: {text}");
}

#[test]
fn mask_domain_spec_solves() {
    let path = tmp("mask.json");
    // A 12x12 block of interior cells with spacing 0.05.
    let rows: Vec<String> = (0..12).map(|_| "1".repeat(12)).collect();
    let spec = serde_json::json!({
        "shape": "mask",
        "params": [0.05],
        "rows": rows,
    });
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = plate(&["solve", "--domain", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 100);
}
