//! Batch front end: ingest a problem description, run the requested
//! analyses, and emit machine-readable reports (JSON) and curve data (CSV).
//!
//! Exit codes are a stable contract: 0 success, 1 configuration or IO
//! error, 2 the gap inequality was refuted, 3 undecided analysis,
//! 4 incompatible datum.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{CaseStudyKind, ProblemConfig};
use tubespec_core::cases::{
    s1_counterexample, su2_agh_check, su2_kernel_growth, su2_spectrum, HalfInt,
};
use tubespec_core::error::Error as CoreError;
use tubespec_core::field::GammaLattice;
use tubespec_core::lattice::DEFAULT_POINT_CAP;
use tubespec_core::operator::{validate_spec, OperatorSpec};
use tubespec_core::propagation::propagation_verdict;
use tubespec_core::solver::{apriori_probe, solve_global, AprioriProbe, SolveOptions, SolveResult};
use tubespec_core::system::{
    agh_scan_with, build_system, gamma_of, shell_min_gaps, AghMode, AghVerdict, ScanOptions,
    SystemBasis,
};

#[derive(Parser)]
#[command(
    name = "tubespec",
    version,
    about = "Spectral solvability analysis of tube-type sums of squares on product tori"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the invariant system, compute the kernel lattice, and run the
    /// gap (AGH) analysis.
    Analyze(CommonArgs),
    /// Solve Pu = f mode by mode and report residuals and decay.
    Solve(CommonArgs),
    /// Run the built-in case studies (su2 | s1) from the config.
    CaseStudies(CommonArgs),
    /// Check propagation of regularity on a window.
    Propagate(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Problem configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve despite compatibility violations (kernel component is removed).
    #[arg(long, default_value_t = false)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Analyze(args) => run(args, cmd_analyze),
        Command::Solve(args) => run(args, cmd_solve),
        Command::CaseStudies(args) => run(args, cmd_case_studies),
        Command::Propagate(args) => run(args, cmd_propagate),
    };
    ExitCode::from(code)
}

struct Ctx<'a> {
    config: &'a ProblemConfig,
    config_dir: &'a Path,
    out_dir: &'a Path,
    force: bool,
    point_cap: u64,
}

fn run(args: &CommonArgs, body: fn(&Ctx) -> Result<u8, CliError>) -> u8 {
    let config = match ProblemConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let config_dir = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("tubespec-out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory: {e}");
        return 1;
    }
    let point_cap = std::env::var("TUBESPEC_MAX_POINTS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_POINT_CAP);
    let ctx = Ctx {
        config: &config,
        config_dir: &config_dir,
        out_dir: &out_dir,
        force: args.force,
        point_cap,
    };
    match body(&ctx) {
        Ok(code) => code,
        Err(CliError::Exit(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

enum CliError {
    Exit(u8, String),
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Exit(1, msg.into())
}

fn core_err(e: CoreError) -> CliError {
    match e {
        CoreError::CompatibilityViolated { violations } => {
            let list: Vec<String> = violations
                .iter()
                .map(|(xi, v)| format!("xi={xi:?} (|<f,k>| = {v:.3e})"))
                .collect();
            CliError::Exit(4, format!("datum has kernel mass at {}", list.join(", ")))
        }
        other => CliError::Exit(1, other.to_string()),
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| config_err(format!("serialization failed: {e}")))?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))
}

fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
    let path = dir.join(name);
    let mut out = String::with_capacity(rows.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    std::fs::write(&path, out)
        .map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))
}

fn prepared_operator(ctx: &Ctx) -> Result<(OperatorSpec, SystemBasis, GammaLattice), CliError> {
    let spec = ctx.config.operator(ctx.config_dir).map_err(config_err)?;
    let spec = validate_spec(&spec).map_err(core_err)?;
    let system = build_system(&spec).map_err(core_err)?;
    let gamma = gamma_of(&system).map_err(core_err)?;
    Ok((spec, system, gamma))
}

// ───────────────────────────────────────────────────────────────────
//  analyze
// ───────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    seed: u64,
    gamma: &'a GammaLattice,
    system: &'a SystemBasis,
    agh: &'a AghVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    apriori: Option<&'a AprioriProbe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster: Option<ClusterReport>,
    equivalences_note: &'static str,
}

#[derive(Serialize)]
struct ClusterReport {
    invariance_defect: f64,
    /// `(λ, c_λ, d_λ)` per shell within the configured radius.
    shells: Vec<(u64, usize, usize)>,
}

fn cluster_report(
    spec: &OperatorSpec,
    gamma: &GammaLattice,
    cc: &config::ClusterConfig,
) -> Result<ClusterReport, CliError> {
    let defect = tubespec_core::cluster::gamma_invariance_defect(spec, gamma, cc.k, cc.radius)
        .map_err(core_err)?;
    let lambda_max = (cc.radius * cc.radius).floor() as u64;
    let mut shells = Vec::new();
    for shell in tubespec_core::lattice::shells_up_to(spec.m, lambda_max).map_err(core_err)? {
        let part =
            tubespec_core::cluster::cluster_partition(gamma, shell.lambda).map_err(core_err)?;
        shells.push((shell.lambda, part.c_lambda, shell.multiplicity()));
    }
    Ok(ClusterReport {
        invariance_defect: defect,
        shells,
    })
}

const EQUIVALENCES_NOTE: &str = "for this operator class, smooth solvability, \
distributional solvability, weak solvability and almost global hypoellipticity \
hold or fail together; the gap verdict below decides all four";

fn cmd_analyze(ctx: &Ctx) -> Result<u8, CliError> {
    let (spec, system, gamma) = prepared_operator(ctx)?;
    let scan = ctx.config.analysis.agh_scan.as_ref();
    let radius = scan.map(|s| s.radius).unwrap_or(50.0);
    let options = ScanOptions {
        rho_max: scan.map(|s| s.rho_max).unwrap_or(10.0),
        witness_q_cap: scan.map(|s| s.witness_q_cap).unwrap_or(10_000_000),
        digits: ctx.config.precision,
        point_cap: ctx.point_cap,
    };
    if radius < 10.0 {
        return Err(config_err("agh_scan.radius must be >= 10"));
    }
    let minima = shell_min_gaps(&system, &gamma, radius, ctx.point_cap).map_err(core_err)?;
    let verdict = agh_scan_with(&system, &gamma, &minima, &options).map_err(core_err)?;
    let probe = match &ctx.config.analysis.apriori {
        Some(ap) => {
            let certified = match verdict.mode {
                AghMode::ExactCertificate => Some(verdict.rho),
                _ => None,
            };
            Some(apriori_probe(&spec, &gamma, ap.k, ap.lambda_max, certified).map_err(core_err)?)
        }
        None => None,
    };

    let cluster = match &ctx.config.analysis.cluster {
        Some(cc) => Some(cluster_report(&spec, &gamma, cc)?),
        None => None,
    };

    let rows: Vec<String> = minima
        .iter()
        .map(|(l, v)| format!("{l},{v:.17e}"))
        .collect();
    write_csv(ctx.out_dir, "gap_fit.csv", "lambda,min_gap", &rows)?;
    let report = AnalyzeReport {
        seed: ctx.config.seed,
        gamma: &gamma,
        system: &system,
        agh: &verdict,
        apriori: probe.as_ref(),
        cluster,
        equivalences_note: EQUIVALENCES_NOTE,
    };
    write_json(ctx.out_dir, "verdicts.json", &report)?;
    let code = match verdict.mode {
        AghMode::Refuted => 2,
        AghMode::Undecided => 3,
        _ => 0,
    };
    let mut stdout = std::io::stdout();
    let _ = writeln!(
        stdout,
        "analyze: mode={:?} c={:.6e} rho={} shells={}",
        verdict.mode,
        verdict.c.to_f64(),
        verdict.rho,
        verdict.shells_scanned
    );
    Ok(code)
}

// ───────────────────────────────────────────────────────────────────
//  solve
// ───────────────────────────────────────────────────────────────────

fn cmd_solve(ctx: &Ctx) -> Result<u8, CliError> {
    let (spec, _system, gamma) = prepared_operator(ctx)?;
    let sc = ctx
        .config
        .analysis
        .solve
        .as_ref()
        .ok_or_else(|| config_err("config has no `analysis.solve` section"))?;
    let f = config::load_function(&sc.f, &sc.f_path, ctx.config_dir, "f").map_err(config_err)?;
    let options = SolveOptions {
        force: sc.force || ctx.force,
        ..SolveOptions::default()
    };
    let result: SolveResult =
        solve_global(&spec, &gamma, &f, sc.k, sc.radius, &options).map_err(core_err)?;

    write_json(ctx.out_dir, "u.json", &result)?;
    let residual_rows: Vec<String> = result
        .per_mode
        .iter()
        .map(|m| {
            format!(
                "{},{:.17e},{:?},{:.17e}",
                m.xi.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                m.residual,
                m.branch,
                m.sigma_min
            )
        })
        .collect();
    write_csv(
        ctx.out_dir,
        "residuals.csv",
        "xi,residual,branch,sigma_min",
        &residual_rows,
    )?;
    let slope = result.decay.fitted_slope;
    let intercept = result.decay.fitted_intercept;
    let sentinel = slope == tubespec_core::fourier::ZERO_TAIL_SLOPE;
    let decay_rows: Vec<String> = result
        .decay
        .points
        .iter()
        .map(|&(l, v)| {
            let fitted = if sentinel {
                0.0
            } else {
                (intercept + slope * ((1 + l) as f64).ln()).exp()
            };
            format!("{l},{v:.17e},{fitted:.17e}")
        })
        .collect();
    write_csv(ctx.out_dir, "decay.csv", "lambda,norm,fitted", &decay_rows)?;
    println!(
        "solve: modes={} residual={:.3e} class={:?} slope={:.3}",
        result.per_mode.len(),
        result.total_residual,
        result.classification,
        slope
    );
    Ok(0)
}

// ───────────────────────────────────────────────────────────────────
//  case studies
// ───────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct Su2Report {
    l_max: f64,
    min_nonzero_gamma: String,
    c: String,
    rho: f64,
    holds: bool,
    cumulative_kernel_dimension: u64,
    levels: Vec<Su2Level>,
}

#[derive(Serialize)]
struct Su2Level {
    l: f64,
    lambda: f64,
    dimension: u64,
    c_lambda: u64,
}

fn cmd_case_studies(ctx: &Ctx) -> Result<u8, CliError> {
    let cs = ctx
        .config
        .analysis
        .case_study
        .as_ref()
        .ok_or_else(|| config_err("config has no `analysis.case_study` section"))?;
    match cs.which {
        CaseStudyKind::Su2 => {
            let l_max = cs.l_max.unwrap_or(20.0);
            let twice = (l_max * 2.0).round() as i64;
            if twice < 0 || (l_max * 2.0 - twice as f64).abs() > 1e-9 {
                return Err(config_err("l_max must be a non-negative half-integer"));
            }
            let h = HalfInt::from_twice(twice);
            let agh = su2_agh_check(h).map_err(core_err)?;
            let growth = su2_kernel_growth(h).map_err(core_err)?;
            let levels = su2_spectrum(h)
                .map_err(core_err)?
                .iter()
                .map(|s| Su2Level {
                    l: s.l.to_f64(),
                    lambda: *s.lambda.numer() as f64 / *s.lambda.denom() as f64,
                    dimension: s.dimension(),
                    c_lambda: s.c_lambda(),
                })
                .collect();
            let report = Su2Report {
                l_max,
                min_nonzero_gamma: format!("{}", agh.min_nonzero_gamma),
                c: format!("{}", agh.c),
                rho: agh.rho,
                holds: agh.holds,
                cumulative_kernel_dimension: growth.cumulative,
                levels,
            };
            write_json(ctx.out_dir, "su2.json", &report)?;
            println!(
                "case-studies su2: min_gamma={} holds={} kernel_dim={}",
                report.min_nonzero_gamma, report.holds, report.cumulative_kernel_dimension
            );
        }
        CaseStudyKind::S1 => {
            let k_cut = cs.k_cut.unwrap_or(40);
            let report = s1_counterexample(k_cut).map_err(core_err)?;
            write_json(ctx.out_dir, "s1.json", &report)?;
            println!(
                "case-studies s1: smooth_residual={} class={:?} constraint={}",
                report.smooth_residual, report.distribution_class, report.cinfty_constraint
            );
        }
    }
    Ok(0)
}

// ───────────────────────────────────────────────────────────────────
//  propagate
// ───────────────────────────────────────────────────────────────────

fn cmd_propagate(ctx: &Ctx) -> Result<u8, CliError> {
    let (spec, _system, _gamma) = prepared_operator(ctx)?;
    let pc = ctx
        .config
        .analysis
        .propagation
        .as_ref()
        .ok_or_else(|| config_err("config has no `analysis.propagation` section"))?;
    let u = config::load_function(&pc.u, &pc.u_path, ctx.config_dir, "u").map_err(config_err)?;
    let thresholds = tubespec_core::fourier::DecayThresholds::default();
    let report = propagation_verdict(&spec, &u, &pc.window, &thresholds).map_err(core_err)?;
    write_json(ctx.out_dir, "propagation.json", &report)?;
    let global_rows: Vec<String> = report
        .global_profile
        .points
        .iter()
        .map(|&(l, v)| format!("{l},{v:.17e}"))
        .collect();
    write_csv(ctx.out_dir, "decay_global.csv", "lambda,norm", &global_rows)?;
    let local_rows: Vec<String> = report
        .local_profile
        .points
        .iter()
        .map(|&(l, v)| format!("{l},{v:.17e}"))
        .collect();
    write_csv(ctx.out_dir, "decay_local.csv", "lambda,norm", &local_rows)?;
    println!("propagate: verdict={:?}", report.verdict);
    Ok(0)
}
