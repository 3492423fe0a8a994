//! `wavelab`: batch laboratory runs for the weighted 1D semilinear wave
//! equation. Subcommands: `solve`, `sweep`, `envelope`, `certify`,
//! `constants`.
//!
//! Exit codes: 0 all requested assertions passed, 1 assertion or numeric
//! failure, 2 usage, 3 I/O.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the sign.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wavelab::blowup::{functional_floor, iteration_constants, s_infinity, threshold_constants};
use wavelab::harness::{
    envelope_audit, epsilon_sweep, fit_scaling, march, sandwich_check, theory_slope, MarchConfig,
    SweepConfig,
};
use wavelab::picard::{picard_solve_with, self_consistent_horizon, PicardParams};
use wavelab::problem::data_by_name;
use wavelab::{validate_spec, InitialData, Mode, Nonlinearity, ProblemSpec};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<wavelab::Error> for CliError {
    fn from(e: wavelab::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "wavelab",
    version,
    about = "Numerical laboratory for the weighted 1D semilinear wave equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March one problem and dump the solution
    Solve(SolveArgs),
    /// Amplitude sweep: blow-up times, scaling fit, sandwich audit
    Sweep(SweepArgs),
    /// Audit the pointwise lower-bound envelopes against a marched run
    Envelope(EnvelopeArgs),
    /// Run the contraction solve and print its existence certificate
    Certify(CertifyArgs),
    /// Dump the blow-up constant ledger
    Constants(ConstantsArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Weight exponent (>= -1)
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Nonlinearity exponent (> 1)
    #[arg(long)]
    p: Option<f64>,
    /// Nonlinearity kind: abspow | signedpow
    #[arg(long)]
    nonlinearity: Option<String>,
    /// Initial datum by name (cos2-bump)
    #[arg(long)]
    data: Option<String>,
    /// Initial datum from a CSV of y,f,g samples (cubic interpolation)
    #[arg(long)]
    data_csv: Option<PathBuf>,
    /// Flat key = value config file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores); results are degree-independent
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Data amplitude
    #[arg(long)]
    eps: Option<f64>,
    /// Lattice spacing
    #[arg(long)]
    h: Option<f64>,
    /// Time horizon
    #[arg(long)]
    t_max: Option<f64>,
    /// Blow-up detection threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Truncation radius for data without declared support
    #[arg(long)]
    r_cut: Option<f64>,
    /// Solve in existence mode instead of blow-up mode
    #[arg(long)]
    existence: bool,
    /// Write the solution as x,t,u CSV here
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Write the binary row dump here
    #[arg(long)]
    out_bin: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Largest amplitude of the sweep
    #[arg(long)]
    eps_start: Option<f64>,
    /// Number of sweep points
    #[arg(long)]
    eps_count: Option<usize>,
    /// Geometric ratio between consecutive amplitudes (in (0,1))
    #[arg(long)]
    eps_ratio: Option<f64>,
    /// Lattice spacing
    #[arg(long)]
    h: Option<f64>,
    /// Blow-up detection threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Hard cap on the per-run time budget
    #[arg(long)]
    budget_cap: Option<f64>,
    /// Output directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Skip the SVG plot
    #[arg(long)]
    no_svg: bool,
}

#[derive(Args, Debug)]
struct EnvelopeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Highest envelope order to audit
    #[arg(long)]
    j_max: Option<u32>,
    /// Write the per-order report as JSON lines here (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    /// Horizon to certify (default: half the self-consistent horizon)
    #[arg(long)]
    t: Option<f64>,
    /// Convergence tolerance (default 1e-8 * M * eps)
    #[arg(long)]
    tol: Option<f64>,
    /// Safety factor on the measured mass-bound constant
    #[arg(long)]
    safety: Option<f64>,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    eps: Option<f64>,
    /// Override the half-mass constant c0 (default: from the datum)
    #[arg(long)]
    c0: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Envelope(args) => run_envelope(args),
        Command::Certify(args) => run_certify(args),
        Command::Constants(args) => run_constants(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wavelab: {e}");
            match e {
                CliError::Failed(_) => ExitCode::from(1),
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Io(_) => ExitCode::from(3),
            }
        }
    }
}

fn init_jobs(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

/// Keys every subcommand accepts in a config file.
const COMMON_KEYS: &[&str] = &["a", "p", "nonlinearity", "data", "data-csv", "jobs"];

fn common_keys_plus(extra: &[&str]) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = COMMON_KEYS.to_vec();
    // Leak is fine: a handful of short strings per process.
    for k in extra {
        keys.push(Box::leak(k.to_string().into_boxed_str()));
    }
    keys
}

#[derive(Debug, Serialize)]
struct ResolvedSpec {
    a: f64,
    p: f64,
    eps: f64,
    nonlinearity: String,
    data: String,
    mode: String,
}

fn build_spec(
    file: &config::FileConfig,
    common: &CommonArgs,
    eps: f64,
    mode: Mode,
) -> Result<(ProblemSpec, ResolvedSpec), CliError> {
    let a = file.resolve("a", common.a, f64::NAN)?;
    let p = file.resolve("p", common.p, f64::NAN)?;
    if !a.is_finite() {
        return Err(CliError::Usage("--a is required".into()));
    }
    if !p.is_finite() {
        return Err(CliError::Usage("--p is required".into()));
    }
    if !(a >= -1.0) {
        return Err(CliError::Usage(format!("--a must be >= -1, got {a}")));
    }
    if !(p > 1.0) {
        return Err(CliError::Usage(format!("--p must exceed 1, got {p}")));
    }
    if !(eps > 0.0) {
        return Err(CliError::Usage(format!(
            "--eps must be positive, got {eps}"
        )));
    }
    let kind = file.resolve("nonlinearity", common.nonlinearity.clone(), "abspow".into())?;
    let nonlinearity = match kind.as_str() {
        "abspow" => Nonlinearity::abs_pow(p),
        "signedpow" => Nonlinearity::signed_pow(p),
        other => {
            return Err(CliError::Usage(format!(
                "unknown nonlinearity `{other}` (use abspow or signedpow)"
            )))
        }
    };
    let csv_path = file.resolve_opt("data-csv", common.data_csv.clone())?;
    let (data, data_name) = match csv_path {
        Some(path) => (load_data_csv(&path)?, path.display().to_string()),
        None => {
            let name = file.resolve("data", common.data.clone(), "cos2-bump".into())?;
            let data = data_by_name(&name)
                .ok_or_else(|| CliError::Usage(format!("unknown data name `{name}`")))?;
            (data, name)
        }
    };
    let spec = ProblemSpec::new(a, eps, nonlinearity, data, mode);
    let resolved = ResolvedSpec {
        a,
        p,
        eps,
        nonlinearity: kind,
        data: data_name,
        mode: format!("{mode:?}"),
    };
    Ok((spec, resolved))
}

fn load_data_csv(path: &PathBuf) -> Result<InitialData, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(CliError::Usage(format!(
                "{}:{}: expected y,f,g",
                path.display(),
                lineno + 1
            )));
        }
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) => samples.push((v[0], v[1], v[2])),
            None if lineno == 0 => continue, // header row
            None => {
                return Err(CliError::Usage(format!(
                    "{}:{}: cannot parse `{line}`",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    InitialData::from_samples(&samples).map_err(|e| CliError::Usage(e.to_string()))
}

fn echo_config<T: Serialize>(resolved: &T) {
    eprintln!(
        "{}",
        serde_json::to_string(resolved).expect("config serializes")
    );
}

fn report_violations(spec: &ProblemSpec) {
    for v in validate_spec(spec) {
        eprintln!("wavelab: warning: {v}");
    }
}

// ---------------------------------------------------------------- solve --

#[derive(Debug, Serialize)]
struct SolveConfigEcho {
    command: &'static str,
    #[serde(flatten)]
    spec: ResolvedSpec,
    h: f64,
    t_max: f64,
    threshold: f64,
    r_cut: f64,
    out_csv: Option<String>,
    out_bin: Option<String>,
}

fn run_solve(args: SolveArgs) -> Result<(), CliError> {
    let keys = common_keys_plus(&[
        "eps",
        "h",
        "t-max",
        "threshold",
        "r-cut",
        "out-csv",
        "out-bin",
        "existence",
    ]);
    let file = config::FileConfig::load(args.common.config.as_deref(), &keys)?;
    init_jobs(file.resolve_opt("jobs", args.common.jobs)?)?;
    let eps = file
        .resolve_opt("eps", args.eps)?
        .ok_or_else(|| CliError::Usage("--eps is required".into()))?;
    let mode = if args.existence {
        Mode::Existence
    } else {
        Mode::Blowup
    };
    let (spec, resolved) = build_spec(&file, &args.common, eps, mode)?;
    let h = file.resolve("h", args.h, 0.02)?;
    let t_max = file.resolve("t-max", args.t_max, 10.0)?;
    let threshold = file.resolve("threshold", args.threshold, 1e6)?;
    let r_cut = file.resolve("r-cut", args.r_cut, 8.0)?;
    require_positive(&[("h", h), ("t-max", t_max), ("threshold", threshold)])?;
    let echo = SolveConfigEcho {
        command: "solve",
        spec: resolved,
        h,
        t_max,
        threshold,
        r_cut,
        out_csv: args.out_csv.as_ref().map(|p| p.display().to_string()),
        out_bin: args.out_bin.as_ref().map(|p| p.display().to_string()),
    };
    echo_config(&echo);
    report_violations(&spec);

    let mut march_cfg = MarchConfig::new(h, t_max, threshold).keeping_rows();
    march_cfg.r_cut = r_cut;
    let sol = march(&spec, &march_cfg)?;
    let grid = sol.grid.as_ref().expect("kept rows");
    if let Some(path) = &args.out_csv {
        wavelab::io::save_solution_csv(path, grid)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(path) = &args.out_bin {
        wavelab::io::save_solution_binary(path, grid)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }

    #[derive(Serialize)]
    struct SolveSummary<'a> {
        t_reached: f64,
        rows: usize,
        sup_final: f64,
        blowup: &'a Option<wavelab::harness::BlowupRow>,
    }
    println!(
        "{}",
        emit::json_pretty(&SolveSummary {
            t_reached: sol.t_reached,
            rows: sol.row_max.len(),
            sup_final: *sol.row_max.last().unwrap(),
            blowup: &sol.blowup,
        })
        .trim_end()
    );
    Ok(())
}

fn require_positive(fields: &[(&str, f64)]) -> Result<(), CliError> {
    for (name, v) in fields {
        if !(*v > 0.0) {
            return Err(CliError::Usage(format!(
                "--{name} must be positive, got {v}"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- sweep --

#[derive(Debug, Serialize)]
struct SweepConfigEcho {
    command: &'static str,
    #[serde(flatten)]
    spec: ResolvedSpec,
    eps_start: f64,
    eps_count: usize,
    eps_ratio: f64,
    h: f64,
    threshold: f64,
    budget_cap: f64,
    out_dir: String,
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let keys = common_keys_plus(&[
        "eps-start",
        "eps-count",
        "eps-ratio",
        "h",
        "threshold",
        "budget-cap",
        "out-dir",
        "no-svg",
    ]);
    let file = config::FileConfig::load(args.common.config.as_deref(), &keys)?;
    init_jobs(file.resolve_opt("jobs", args.common.jobs)?)?;
    let eps_start = file
        .resolve_opt("eps-start", args.eps_start)?
        .ok_or_else(|| CliError::Usage("--eps-start is required".into()))?;
    let eps_count = file.resolve("eps-count", args.eps_count, 8)?;
    let eps_ratio = file.resolve("eps-ratio", args.eps_ratio, std::f64::consts::FRAC_1_SQRT_2)?;
    let h = file.resolve("h", args.h, 0.01)?;
    let threshold = file.resolve("threshold", args.threshold, 1e6)?;
    let budget_cap = file.resolve("budget-cap", args.budget_cap, 5000.0)?;
    let out_dir = file.resolve("out-dir", args.out_dir.clone(), PathBuf::from("out"))?;
    if !(eps_ratio > 0.0 && eps_ratio < 1.0) {
        return Err(CliError::Usage(format!(
            "--eps-ratio must lie in (0, 1), got {eps_ratio}"
        )));
    }
    if eps_count < 1 {
        return Err(CliError::Usage("--eps-count must be at least 1".into()));
    }
    require_positive(&[
        ("h", h),
        ("threshold", threshold),
        ("budget-cap", budget_cap),
    ])?;
    let (template, resolved) = build_spec(&file, &args.common, eps_start, Mode::Blowup)?;
    let echo = SweepConfigEcho {
        command: "sweep",
        spec: resolved,
        eps_start,
        eps_count,
        eps_ratio,
        h,
        threshold,
        budget_cap,
        out_dir: out_dir.display().to_string(),
    };
    echo_config(&echo);
    report_violations(&template);

    let eps_list: Vec<f64> = (0..eps_count)
        .map(|k| eps_start * eps_ratio.powi(k as i32))
        .collect();
    let mut sweep_cfg = SweepConfig::new(h, threshold);
    sweep_cfg.budget_cap = budget_cap;
    let records = epsilon_sweep(&template, &eps_list, &sweep_cfg)?;
    emit::write_file(&out_dir.join("sweep.csv"), &emit::sweep_csv(&records))?;
    emit::write_file(&out_dir.join("sweep.json"), &emit::json_pretty(&records))?;

    let slope_theory = theory_slope(template.a, template.p());
    let fit = fit_scaling(&records, template.a, template.p())?;
    emit::write_file(&out_dir.join("fit.csv"), &emit::fit_csv(&fit, slope_theory))?;
    emit::write_file(&out_dir.join("fit.json"), &emit::json_pretty(&fit))?;

    let sandwich = sandwich_check(&records, &template)?;
    emit::write_file(
        &out_dir.join("sandwich.jsonl"),
        &emit::sandwich_jsonl(&sandwich),
    )?;

    if !args.no_svg && !file.resolve("no-svg", None::<bool>, false)? {
        let svg = emit::scaling_svg(&records, &fit, slope_theory, template.a == 0.0);
        emit::write_file(&out_dir.join("scaling.svg"), &svg)?;
    }

    #[derive(Serialize)]
    struct SweepSummary {
        n_records: usize,
        n_censored: usize,
        fit: wavelab::harness::ScalingFit,
        theory_slope: f64,
        sandwich_all_pass: bool,
    }
    let summary = SweepSummary {
        n_records: records.len(),
        n_censored: records.iter().filter(|r| r.censored).count(),
        fit,
        theory_slope: slope_theory,
        sandwich_all_pass: sandwich.all_pass,
    };
    println!("{}", emit::json_pretty(&summary).trim_end());
    if !sandwich.all_pass {
        return Err(CliError::Failed("sandwich audit failed".into()));
    }
    Ok(())
}

// ------------------------------------------------------------- envelope --

#[derive(Debug, Serialize)]
struct EnvelopeConfigEcho {
    command: &'static str,
    #[serde(flatten)]
    spec: ResolvedSpec,
    h: f64,
    t_max: f64,
    threshold: f64,
    j_max: u32,
    out: Option<String>,
}

fn run_envelope(args: EnvelopeArgs) -> Result<(), CliError> {
    let keys = common_keys_plus(&["eps", "h", "t-max", "threshold", "j-max", "out"]);
    let file = config::FileConfig::load(args.common.config.as_deref(), &keys)?;
    init_jobs(file.resolve_opt("jobs", args.common.jobs)?)?;
    let eps = file
        .resolve_opt("eps", args.eps)?
        .ok_or_else(|| CliError::Usage("--eps is required".into()))?;
    let (spec, resolved) = build_spec(&file, &args.common, eps, Mode::Blowup)?;
    let h = file.resolve("h", args.h, 0.02)?;
    let t_max = file.resolve("t-max", args.t_max, 12.0)?;
    let threshold = file.resolve("threshold", args.threshold, 1e6)?;
    let j_max = file.resolve("j-max", args.j_max, 3)?;
    require_positive(&[("h", h), ("t-max", t_max), ("threshold", threshold)])?;
    let echo = EnvelopeConfigEcho {
        command: "envelope",
        spec: resolved,
        h,
        t_max,
        threshold,
        j_max,
        out: args.out.as_ref().map(|p| p.display().to_string()),
    };
    echo_config(&echo);
    let violations = validate_spec(&spec);
    if !violations.is_empty() {
        return Err(CliError::Usage(format!(
            "envelope audit needs an admissible blow-up spec: {}",
            violations.join("; ")
        )));
    }

    let sol = march(&spec, &MarchConfig::new(h, t_max, threshold).keeping_rows())?;
    let consts = iteration_constants(spec.p(), spec.a, spec.data.c0, spec.eps);
    let report = envelope_audit(&sol, &spec, &consts, j_max)?;
    let mut lines = String::new();
    for row in &report.rows {
        lines.push_str(&serde_json::to_string(row).expect("serializable"));
        lines.push('\n');
    }
    match &args.out {
        Some(path) => emit::write_file(path, &lines)?,
        None => print!("{lines}"),
    }
    if report.total_violations() > 0 {
        return Err(CliError::Failed(format!(
            "{} envelope violations",
            report.total_violations()
        )));
    }
    Ok(())
}

// -------------------------------------------------------------- certify --

#[derive(Debug, Serialize)]
struct CertifyConfigEcho {
    command: &'static str,
    #[serde(flatten)]
    spec: ResolvedSpec,
    h: f64,
    t: Option<f64>,
    safety: f64,
}

fn run_certify(args: CertifyArgs) -> Result<(), CliError> {
    let keys = common_keys_plus(&["eps", "h", "t", "tol", "safety"]);
    let file = config::FileConfig::load(args.common.config.as_deref(), &keys)?;
    init_jobs(file.resolve_opt("jobs", args.common.jobs)?)?;
    let eps = file
        .resolve_opt("eps", args.eps)?
        .ok_or_else(|| CliError::Usage("--eps is required".into()))?;
    let (spec, resolved) = build_spec(&file, &args.common, eps, Mode::Existence)?;
    let h = file.resolve("h", args.h, 0.02)?;
    let safety = file.resolve("safety", args.safety, 2.0)?;
    let t_flag = file.resolve_opt("t", args.t)?;
    let tol = file.resolve_opt("tol", args.tol)?;
    require_positive(&[("h", h), ("safety", safety)])?;
    let echo = CertifyConfigEcho {
        command: "certify",
        spec: resolved,
        h,
        t: t_flag,
        safety,
    };
    echo_config(&echo);
    report_violations(&spec);

    let horizon = self_consistent_horizon(&spec, safety)?;
    let t = match t_flag {
        Some(t) => t,
        None => {
            if !horizon.certified || horizon.t_star <= 0.0 {
                return Err(CliError::Failed(
                    "no certified horizon at this amplitude".into(),
                ));
            }
            // Round half the horizon to the lattice.
            ((0.5 * horizon.t_star / h).floor().max(1.0)) * h
        }
    };
    let params = PicardParams {
        h,
        t,
        tol,
        r_cut: 8.0,
        c_a: Some(horizon.c_a),
        safety,
    };
    let outcome = picard_solve_with(&spec, &params)?;

    #[derive(Serialize)]
    struct CertifySummary<'a> {
        horizon: &'a wavelab::picard::EmpiricalHorizon,
        t: f64,
        iterations: usize,
        residual: f64,
        max_ratio: f64,
        iterate_sup_bound: f64,
        c_a_source: &'static str,
        certificate: &'a Option<wavelab::picard::ExistenceCertificate>,
    }
    let max_ratio = outcome.ratios.iter().cloned().fold(0.0f64, f64::max);
    let sup_bound = outcome.iterate_sups.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "{}",
        emit::json_pretty(&CertifySummary {
            horizon: &horizon,
            t,
            iterations: outcome.iterations,
            residual: outcome.residual,
            max_ratio,
            iterate_sup_bound: sup_bound,
            c_a_source: "empirical grid supremum times safety factor",
            certificate: &outcome.certificate,
        })
        .trim_end()
    );
    if outcome.certificate.is_none() {
        return Err(CliError::Failed("certificate withheld".into()));
    }
    Ok(())
}

// ------------------------------------------------------------ constants --

#[derive(Debug, Serialize)]
struct ConstantsEcho {
    command: &'static str,
    a: f64,
    p: f64,
    eps: f64,
    c0: f64,
}

fn run_constants(args: ConstantsArgs) -> Result<(), CliError> {
    let keys = common_keys_plus(&["eps", "c0"]);
    let file = config::FileConfig::load(args.common.config.as_deref(), &keys)?;
    let eps = file
        .resolve_opt("eps", args.eps)?
        .ok_or_else(|| CliError::Usage("--eps is required".into()))?;
    let (spec, _) = build_spec(&file, &args.common, eps, Mode::Blowup)?;
    let c0 = file.resolve("c0", args.c0, spec.data.c0)?;
    if !(c0 > 0.0) {
        return Err(CliError::Usage(format!("c0 must be positive, got {c0}")));
    }
    let (p, a) = (spec.p(), spec.a);
    echo_config(&ConstantsEcho {
        command: "constants",
        a,
        p,
        eps,
        c0,
    });

    let consts = iteration_constants(p, a, c0, eps);
    let tc = threshold_constants(p, a, c0);

    #[derive(Serialize)]
    struct Ledger {
        p: f64,
        a: f64,
        c0: f64,
        eps: f64,
        e_pa: f64,
        f_pa: f64,
        k_a: f64,
        log_c1: f64,
        s_infinity: f64,
        b: f64,
        eps_cap: f64,
        regime_floor: f64,
        theory_slope: f64,
    }
    println!(
        "{}",
        emit::json_pretty(&Ledger {
            p,
            a,
            c0,
            eps,
            e_pa: consts.e_pa,
            f_pa: consts.f_pa,
            k_a: consts.k_a,
            log_c1: consts.log_c1,
            s_infinity: s_infinity(p),
            b: tc.b,
            eps_cap: tc.eps_cap,
            regime_floor: functional_floor(a),
            theory_slope: theory_slope(a, p),
        })
        .trim_end()
    );
    Ok(())
}
