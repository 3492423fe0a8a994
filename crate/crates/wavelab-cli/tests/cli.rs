//! End-to-end runs of the `wavelab` binary: exit codes, file outputs,
//! config precedence, and byte reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn wavelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn constants_ledger_values() {
    let out = wavelab(&["constants", "--a", "1", "--p", "2", "--eps", "0.1"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["e_pa"].as_f64().unwrap(), 0.0625);
    assert_eq!(v["f_pa"].as_f64().unwrap(), 4.0);
    assert_eq!(v["k_a"].as_f64().unwrap(), 0.125);
    assert_eq!(v["s_infinity"].as_f64().unwrap(), 2.0);
    assert_eq!(v["theory_slope"].as_f64().unwrap(), -1.0);
    assert!(v["b"].as_f64().unwrap() > 0.0);
    assert!(v["eps_cap"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_two() {
    // p <= 1 is rejected before any work happens.
    let out = wavelab(&["constants", "--a", "1", "--p", "0.9", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown flags are clap usage errors.
    let out = wavelab(&[
        "constants",
        "--a",
        "1",
        "--p",
        "2",
        "--eps",
        "0.1",
        "--bogus",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Missing required amplitude.
    let out = wavelab(&["solve", "--a", "1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown datum name.
    let out = wavelab(&[
        "constants",
        "--a",
        "1",
        "--p",
        "2",
        "--eps",
        "0.1",
        "--data",
        "square-bump",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_precedence_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "h = 0.05\nt-max = 1.0\neps = 0.3\n").unwrap();

    // Flag overrides the file value; the resolved config echo shows it.
    let out = wavelab(&[
        "solve",
        "--a",
        "1",
        "--p",
        "2",
        "--h",
        "0.025",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    let echo: serde_json::Value =
        serde_json::from_str(stderr.lines().next().unwrap()).expect("stderr echoes JSON config");
    assert_eq!(echo["h"].as_f64().unwrap(), 0.025);
    assert_eq!(echo["eps"].as_f64().unwrap(), 0.3);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "hh = 0.05\n").unwrap();
    let out = wavelab(&[
        "solve",
        "--a",
        "1",
        "--p",
        "2",
        "--eps",
        "0.3",
        "--config",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_writes_solution_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sol.csv");
    let bin = dir.path().join("sol.bin");
    let out = wavelab(&[
        "solve",
        "--a",
        "1",
        "--p",
        "2",
        "--eps",
        "0.3",
        "--h",
        "0.05",
        "--t-max",
        "1",
        "--out-csv",
        csv.to_str().unwrap(),
        "--out-bin",
        bin.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,t,u\n"));

    let grid = wavelab::io::load_solution_binary(&bin).unwrap();
    assert_eq!(grid.h(), 0.05);
    // CSV row count minus header equals the node count.
    assert_eq!(text.lines().count() - 1, grid.nx() * grid.nt());
}

#[test]
fn sweep_outputs_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out_dir: &Path, jobs: Option<&str>| {
        let mut args = vec![
            "sweep",
            "--a",
            "-1",
            "--p",
            "2",
            "--eps-start",
            "0.4",
            "--eps-count",
            "4",
            "--h",
            "0.05",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ];
        if let Some(n) = jobs {
            args.extend(["--jobs", n]);
        }
        let out = wavelab(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    };
    let d1 = dir.path().join("one");
    let d2 = dir.path().join("two");
    let d3 = dir.path().join("three");
    let out = run(&d1, None);
    run(&d2, None);
    // Results must not depend on the parallelism degree.
    run(&d3, Some("1"));
    assert_eq!(
        std::fs::read(d1.join("sweep.csv")).unwrap(),
        std::fs::read(d3.join("sweep.csv")).unwrap(),
        "sweep.csv depends on --jobs"
    );

    let summary = stdout_json(&out);
    assert_eq!(summary["n_records"].as_u64().unwrap(), 4);
    assert!(summary["sandwich_all_pass"].as_bool().unwrap());

    let csv = std::fs::read_to_string(d1.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(csv.starts_with("eps,T_numeric,T_extrapolated,h,threshold,censored\n"));

    let fit_csv = std::fs::read_to_string(d1.join("fit.csv")).unwrap();
    assert!(fit_csv.starts_with("slope,stderr,r_squared,theory_slope\n"));

    let svg = std::fs::read_to_string(d1.join("scaling.svg")).unwrap();
    assert_eq!(svg.matches("circle class=\"pt\"").count(), 4);
    assert_eq!(svg.matches("class=\"fit-line\"").count(), 1);
    assert_eq!(svg.matches("class=\"theory-line\"").count(), 1);

    // Identical configs byte-reproduce every output.
    for name in [
        "sweep.csv",
        "sweep.json",
        "fit.csv",
        "fit.json",
        "sandwich.jsonl",
        "scaling.svg",
    ] {
        let a = std::fs::read(d1.join(name)).unwrap();
        let b = std::fs::read(d2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn envelope_audit_passes_on_admissible_run() {
    let out = wavelab(&[
        "envelope", "--a", "1", "--p", "2", "--eps", "0.3", "--h", "0.05", "--t-max", "6",
        "--j-max", "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines: Vec<&str> = std::str::from_utf8(&out.stdout).unwrap().lines().collect();
    assert_eq!(lines.len(), 2);
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(first["violations"].as_u64().unwrap(), 0);
}

#[test]
fn certify_issues_and_withholds() {
    let out = wavelab(&[
        "certify", "--a", "1", "--p", "2", "--eps", "0.05", "--h", "0.05",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert!(v["certificate"].is_object());
    assert!(v["certificate"]["contraction_ratio"].as_f64().unwrap() <= 0.55);

    // Amplitude far beyond any certified horizon: exit 1.
    let out = wavelab(&[
        "certify", "--a", "1", "--p", "2", "--eps", "64", "--h", "0.05",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn io_failures_exit_three() {
    let out = wavelab(&[
        "sweep",
        "--a",
        "-1",
        "--p",
        "2",
        "--eps-start",
        "0.4",
        "--eps-count",
        "4",
        "--h",
        "0.05",
        "--out-dir",
        "/dev/null/nope",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tabulated_data_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bump.csv");
    let mut text = String::from("y,f,g\n");
    let n = 41;
    for k in 0..n {
        let y = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
        let g = (std::f64::consts::FRAC_PI_2 * y).cos().powi(2);
        text.push_str(&format!("{y},0.0,{g}\n"));
    }
    std::fs::write(&csv, text).unwrap();
    let out = wavelab(&[
        "constants",
        "--a",
        "0.5",
        "--p",
        "2",
        "--eps",
        "0.1",
        "--data-csv",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    let c0 = v["c0"].as_f64().unwrap();
    assert!((c0 - 0.5).abs() < 1e-3, "spline c0 = {c0}");
}
